#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "tfac/adaptive_control.hpp"
#include "tfac/experiments.hpp"

using namespace tfac;

namespace {

Simulation make_sim(double alpha = 0.5) {
  SolverOptions opt;
  opt.step_bound = StepBoundPolicy::ignore;
  return Simulation(random_ic_problem(alpha, 0.05, 16, 3), opt);
}

}  // namespace

TEST_CASE("step proposal formula") {
  StepControl ctl;
  CHECK(tau_ada(2.5e-4, 0.01, ctl) == doctest::Approx(0.018));
  CHECK(tau_ada(4e-3, 0.1, ctl) == doctest::Approx(0.045));
  CHECK(tau_ada(ctl.tol, 0.02, ctl) == doctest::Approx(0.9 * 0.02));
  CHECK(tau_ada(0.0, 0.02, ctl) == std::numeric_limits<double>::infinity());
  CHECK(ctl.clamp(tau_ada(0.0, 0.02, ctl)) == ctl.tau_max);
  CHECK(ctl.clamp(1e-9) == ctl.tau_min);
}

TEST_CASE("controller validation") {
  StepControl ctl;
  ctl.tau_min = 0.5;
  CHECK_THROWS_AS(ctl.validate(), InvalidParameter);
  ctl = {};
  ctl.safety = 1.5;
  CHECK_THROWS_AS(ctl.validate(), InvalidParameter);
  ctl = {};
  ctl.tol = 0.0;
  CHECK_THROWS_AS(ctl.validate(), InvalidParameter);
}

TEST_CASE("relative difference") {
  Field a(4, 1.0, 1.0), b(4, 1.0, 2.0);
  b[3] = 4.0;
  CHECK(relative_difference(a, b, ErrorNorm::max) == doctest::Approx(0.75));
  CHECK(relative_difference(a, b, ErrorNorm::l2) == doctest::Approx(std::sqrt(24.0) / std::sqrt(76.0)));
  CHECK(relative_difference(a, a, ErrorNorm::max) == 0.0);
}

TEST_CASE("equilibrium steps are accepted and grow to the cap") {
  Problem p;
  p.alpha = 0.5;
  p.epsilon = 0.05;
  p.initial = Field(8, 1.0, 1.0);
  Simulation sim(std::move(p), {});
  StepControl ctl;
  std::vector<TraceRow> trace;
  const auto r = adaptive_step(sim, 0.01, 0.01, 10.0, ctl, &trace);
  CHECK(r.e == 0.0);
  CHECK(r.tau_taken == 0.01);
  CHECK(r.tau_next == ctl.tau_max);
  CHECK(r.recomputes == 0);
  REQUIRE(trace.size() == 1);
  CHECK(trace[0].accepted);
}

TEST_CASE("rejected steps shrink to the two-thirds floor") {
  Simulation sim = make_sim();
  sim.advance(0.05);
  StepControl ctl;
  ctl.tol = 1e-12;
  ctl.tau_min = 1e-6;
  std::vector<TraceRow> trace;
  const auto r = adaptive_step(sim, 0.05, 0.05, 10.0, ctl, &trace);
  REQUIRE(trace.size() >= 2);
  CHECK_FALSE(trace.front().accepted);
  CHECK(trace.back().accepted);
  CHECK(r.recomputes == static_cast<int>(trace.size()) - 1);
  CHECK(r.tau_taken == doctest::Approx(2.0 / 3.0 * 0.05).epsilon(1e-12));
  CHECK_FALSE(r.forced);
  CHECK(sim.steps() == 2);
}

TEST_CASE("a retry that cannot change the step is forced through") {
  Simulation sim = make_sim();
  sim.advance(0.05);
  StepControl ctl;
  ctl.tol = 1e-12;
  ctl.tau_min = ctl.tau_max = 0.05;
  const auto r = adaptive_step(sim, 0.05, 0.05, 10.0, ctl);
  CHECK(r.forced);
  CHECK(r.tau_taken == 0.05);
}

TEST_CASE("the recompute limit forces acceptance") {
  Simulation sim = make_sim();
  sim.advance(0.05);
  StepControl ctl;
  ctl.tol = 1e-14;
  ctl.tau_min = 1e-8;
  ctl.max_recompute = 1;
  // a tiny previous step puts the floor far below the first retry
  const auto r = adaptive_step(sim, 0.05, 1e-9, 10.0, ctl);
  CHECK(r.forced);
  CHECK(r.recomputes == 1);
}

TEST_CASE("adaptive run lands on T and is deterministic") {
  StepControl ctl;
  ctl.tau_min = 1e-3;
  ctl.tau_max = 0.2;
  ctl.tol = 1e-3;
  auto run = [&] {
    Simulation sim = make_sim(0.7);
    sim.run(build_graded(0.05, 10, 3.0));
    std::size_t seen = 0;
    const auto rep = run_adaptive(sim, 2.0, ctl, 0.0, [&](const Simulation&) { ++seen; });
    CHECK(seen == rep.accepted);
    CHECK(sim.time() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rep.attempts >= rep.accepted);
    CHECK(rep.max_step <= ctl.tau_max * (1 + 1e-12));
    std::vector<double> nodes(sim.nodes().begin(), sim.nodes().end());
    return nodes;
  };
  const auto a = run();
  const auto b = run();
  CHECK(a == b);
  // away from the final clipping, accepted steps never drop below two thirds of the previous one
  for (std::size_t k = 2; k + 3 < a.size(); ++k)
    CHECK((a[k + 1] - a[k]) >= 2.0 / 3.0 * (a[k] - a[k - 1]) * (1 - 1e-12) - 1e-15);
}

TEST_CASE("adaptive run needs a first step") {
  Simulation sim = make_sim();
  CHECK_THROWS_AS(run_adaptive(sim, 1.0, {}), InvalidParameter);
}

TEST_CASE("trace CSV") {
  std::vector<TraceRow> rows{{1, 1, 0.1, 0.5, false}, {2, 1, 0.05, 1e-4, true}};
  std::ostringstream os;
  write_trace_csv(os, rows);
  CHECK(os.str() == "attempt,n,tau,e,accepted\n1,1,0.10000000000000001,0.5,0\n2,1,0.050000000000000003,0.0001,1\n");
}
