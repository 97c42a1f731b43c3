#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "tfac/time_mesh.hpp"

using namespace tfac;

TEST_CASE("graded mesh follows the power law and ends on T0") {
  const TimeMesh m = build_graded(0.5, 10, 3.0);
  REQUIRE(m.size() == 10);
  CHECK(m.node(0) == 0.0);
  CHECK(m.final_time() == 0.5);
  for (std::size_t k = 0; k <= 10; ++k)
    CHECK(m.node(k) == doctest::Approx(0.5 * std::pow(k / 10.0, 3.0)).epsilon(1e-15));
  CHECK(m.step(1) == doctest::Approx(0.5e-3));
}

TEST_CASE("uniform mesh") {
  const TimeMesh m = build_uniform(1.0, 32);
  for (std::size_t k = 1; k <= 32; ++k) CHECK(m.step(k) == doctest::Approx(1.0 / 32).epsilon(1e-14));
  CHECK(m.ratio(5) == doctest::Approx(1.0));
  CHECK(m.offset_point(4, 0.25) == doctest::Approx(4.0 / 32 - 0.25 / 32));
}

TEST_CASE("mesh validation") {
  CHECK_THROWS_AS(TimeMesh({0.0}), InvalidParameter);
  CHECK_THROWS_AS(TimeMesh({0.1, 0.2}), InvalidParameter);
  CHECK_THROWS_AS(TimeMesh({0.0, 0.2, 0.2}), InvalidParameter);
  CHECK_THROWS_AS(build_graded(1.0, 4, 0.5), InvalidParameter);
  CHECK_THROWS_AS(build_graded(-1.0, 4, 2.0), InvalidParameter);
  const TimeMesh m({0.0, 1.0});
  CHECK_THROWS_AS(m.step(0), std::out_of_range);
  CHECK_THROWS_AS(m.step(2), std::out_of_range);
  CHECK_THROWS_AS(m.ratio(1), std::out_of_range);
}

TEST_CASE("Rng draws from the open unit interval and is seed deterministic") {
  Rng a(11), b(11), c(12);
  std::mt19937_64 ref(11);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform_open();
    CHECK(x > 0.0);
    CHECK(x < 1.0);
    CHECK(x == b.uniform_open());
    CHECK(x == (static_cast<double>(ref() >> 11) + 0.5) / 9007199254740992.0);
    differs = differs || x != c.uniform_open();
  }
  CHECK(differs);
}

TEST_CASE("random tail divides the remainder in proportion to the draws") {
  const TimeMesh start = build_graded(0.25, 4, 2.0);
  const TimeMesh m = append_random_tail(start, 1.0, 6, 99);
  REQUIRE(m.size() == 10);
  CHECK(m.final_time() == 1.0);
  Rng rng(99);
  std::vector<double> eps(6);
  double sum = 0.0;
  for (auto& e : eps) sum += (e = rng.uniform_open());
  for (std::size_t k = 1; k <= 6; ++k)
    CHECK(m.step(4 + k) == doctest::Approx(0.75 * eps[k - 1] / sum).epsilon(1e-12));
}

TEST_CASE("two-part mesh defaults") {
  // gamma = 1 and T = 1 put T0 at T, so the mesh is uniform
  const TimeMesh u = build_two_part(1.0, 32, 1.0, 0.0, 0, 5);
  CHECK(u.size() == 32);
  CHECK(u.max_step() == doctest::Approx(1.0 / 32));

  const TimeMesh g = build_two_part(1.0, 64, 4.0, 0.0, 0, 5);
  CHECK(g.size() == 64);
  CHECK(g.node(32) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g.node(1) == doctest::Approx(0.25 * std::pow(1.0 / 32, 4.0)));
  CHECK(g.final_time() == 1.0);
  CHECK_THROWS_AS(build_two_part(1.0, 8, 4.0, 0.25, 8, 1), InvalidParameter);
}

TEST_CASE("random ratio meshes satisfy M1 and repeat for a seed") {
  for (std::uint64_t seed = 1; seed < 50; ++seed) {
    const TimeMesh m = random_ratio_mesh(1.0, 40, seed);
    CHECK(check_m1(m).m1_ok);
    CHECK(m.final_time() == 1.0);
    const TimeMesh again = random_ratio_mesh(1.0, 40, seed);
    CHECK(std::equal(m.nodes().begin(), m.nodes().end(), again.nodes().begin()));
  }
}

TEST_CASE("M1 and M2 reports") {
  const TimeMesh bad({0.0, 1.0, 1.5, 1.6});  // ratios 2 and 5
  const auto r = check_m1(bad);
  CHECK_FALSE(r.m1_ok);
  CHECK(r.m1_violations == 2);
  CHECK(r.max_ratio == doctest::Approx(5.0));

  const double gamma = 3.0;
  const TimeMesh g = build_graded(1.0, 20, gamma);
  const auto r2 = check_m2(g, gamma);
  CHECK(r2.m1_ok);  // graded steps increase
  CHECK(r2.m2_c2 == doctest::Approx(std::pow(2.0, gamma)));
  // the M2 constant stays bounded under refinement
  const auto r3 = check_m2(build_graded(1.0, 80, gamma), gamma);
  CHECK(r3.m2_c1 < 2.0 * r2.m2_c1);
}

TEST_CASE("extended mesh and CSV output") {
  const TimeMesh m = build_uniform(1.0, 2).extended(0.5);
  CHECK(m.size() == 3);
  CHECK(m.final_time() == 1.5);
  std::ostringstream os;
  write_mesh_csv(os, m);
  CHECK(os.str().rfind("k,t_k,tau_k\n0,0,0\n1,0.5,0.5\n", 0) == 0);
}
