#include "tfac/time_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

namespace tfac {

TimeMesh::TimeMesh(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2)
    throw InvalidParameter("time mesh needs at least one cell");
  if (nodes_.front() != 0.0)
    throw InvalidParameter("time mesh must start at t_0 = 0");
  steps_.resize(nodes_.size() - 1);
  for (std::size_t k = 1; k < nodes_.size(); ++k) {
    if (!(nodes_[k] > nodes_[k - 1]) || !std::isfinite(nodes_[k]))
      throw InvalidParameter("time mesh nodes must be finite and strictly increasing (k = " +
                             std::to_string(k) + ")");
    steps_[k - 1] = nodes_[k] - nodes_[k - 1];
  }
}

double TimeMesh::step(std::size_t k) const {
  if (k == 0 || k > steps_.size())
    throw std::out_of_range("step index " + std::to_string(k) + " outside 1.." +
                            std::to_string(steps_.size()));
  return steps_[k - 1];
}

double TimeMesh::ratio(std::size_t k) const {
  if (k == 0 || k >= steps_.size())
    throw std::out_of_range("ratio index " + std::to_string(k) + " outside 1.." +
                            std::to_string(steps_.size() - 1));
  return steps_[k - 1] / steps_[k];
}

double TimeMesh::max_step() const { return *std::max_element(steps_.begin(), steps_.end()); }
double TimeMesh::min_step() const { return *std::min_element(steps_.begin(), steps_.end()); }

double TimeMesh::offset_point(std::size_t k, double theta) const {
  return (1.0 - theta) * node(k) + theta * node(k - 1);
}

TimeMesh TimeMesh::extended(double tau) const {
  if (!(tau > 0.0)) throw InvalidParameter("appended step must be positive");
  std::vector<double> nodes = nodes_;
  nodes.push_back(nodes.back() + tau);
  return TimeMesh(std::move(nodes));
}

TimeMesh build_graded(double t0, std::size_t n0, double gamma) {
  if (!(t0 > 0.0)) throw InvalidParameter("graded mesh: T0 must be positive");
  if (n0 == 0) throw InvalidParameter("graded mesh: N0 must be at least 1");
  if (!(gamma >= 1.0)) throw InvalidParameter("graded mesh: gamma must be >= 1");
  std::vector<double> nodes(n0 + 1);
  for (std::size_t k = 0; k <= n0; ++k)
    nodes[k] = t0 * std::pow(static_cast<double>(k) / static_cast<double>(n0), gamma);
  nodes[n0] = t0;
  return TimeMesh(std::move(nodes));
}

TimeMesh build_uniform(double final_time, std::size_t n) {
  return build_graded(final_time, n, 1.0);
}

TimeMesh append_random_tail(const TimeMesh& mesh, double final_time, std::size_t n1,
                            std::uint64_t seed) {
  const double start = mesh.final_time();
  if (!(final_time > start))
    throw InvalidParameter("random tail: T must exceed the last mesh node");
  if (n1 == 0) throw InvalidParameter("random tail: N1 must be at least 1");

  Rng rng(seed);
  std::vector<double> eps(n1);
  double sum = 0.0;
  for (auto& e : eps) {
    e = rng.uniform_open();
    sum += e;
  }
  const double span = final_time - start;
  std::vector<double> nodes(mesh.nodes().begin(), mesh.nodes().end());
  double t = start;
  for (std::size_t k = 0; k + 1 < n1; ++k) {
    t += span * eps[k] / sum;
    nodes.push_back(t);
  }
  nodes.push_back(final_time);
  return TimeMesh(std::move(nodes));
}

TimeMesh append_uniform_tail(const TimeMesh& mesh, double final_time, std::size_t n1) {
  const double start = mesh.final_time();
  if (!(final_time > start))
    throw InvalidParameter("uniform tail: T must exceed the last mesh node");
  if (n1 == 0) throw InvalidParameter("uniform tail: N1 must be at least 1");
  std::vector<double> nodes(mesh.nodes().begin(), mesh.nodes().end());
  const double tau = (final_time - start) / static_cast<double>(n1);
  for (std::size_t k = 1; k < n1; ++k) nodes.push_back(start + static_cast<double>(k) * tau);
  nodes.push_back(final_time);
  return TimeMesh(std::move(nodes));
}

TimeMesh build_two_part(double final_time, std::size_t n, double gamma, double t0,
                        std::size_t n0, std::uint64_t seed) {
  if (!(final_time > 0.0)) throw InvalidParameter("two-part mesh: T must be positive");
  if (n == 0) throw InvalidParameter("two-part mesh: N must be at least 1");
  if (t0 <= 0.0) t0 = std::min(1.0 / gamma, final_time);
  if (t0 >= final_time) return build_graded(final_time, n, gamma);
  if (n0 == 0) n0 = std::max<std::size_t>(1, n / 2);
  if (n0 >= n) throw InvalidParameter("two-part mesh: N0 must leave cells for the tail");
  return append_random_tail(build_graded(t0, n0, gamma), final_time, n - n0, seed);
}

TimeMesh random_ratio_mesh(double final_time, std::size_t n, std::uint64_t seed,
                           double rho_lo, double rho_hi) {
  if (n == 0) throw InvalidParameter("random mesh: N must be at least 1");
  if (!(rho_lo > 0.0 && rho_hi >= rho_lo))
    throw InvalidParameter("random mesh: invalid ratio range");
  Rng rng(seed);
  std::vector<double> steps(n);
  steps[0] = 1.0;
  for (std::size_t k = 1; k < n; ++k) steps[k] = steps[k - 1] / rng.uniform(rho_lo, rho_hi);
  double sum = 0.0;
  for (double s : steps) sum += s;
  std::vector<double> nodes(n + 1, 0.0);
  for (std::size_t k = 1; k < n; ++k) nodes[k] = nodes[k - 1] + final_time * steps[k - 1] / sum;
  nodes[n] = final_time;
  return TimeMesh(std::move(nodes));
}

MeshReport check_m1(const TimeMesh& mesh) {
  MeshReport report;
  report.max_step = mesh.max_step();
  for (std::size_t k = 1; k < mesh.size(); ++k) {
    const double rho = mesh.ratio(k);
    report.max_ratio = std::max(report.max_ratio, rho);
    if (rho > kMaxStepRatio) ++report.m1_violations;
  }
  report.m1_ok = report.m1_violations == 0;
  return report;
}

MeshReport check_m2(const TimeMesh& mesh, double gamma) {
  if (!(gamma >= 1.0)) throw InvalidParameter("M2 check: gamma must be >= 1");
  MeshReport report = check_m1(mesh);
  report.m2_gamma = gamma;
  const double tau = report.max_step;
  for (std::size_t k = 1; k <= mesh.size(); ++k) {
    const double tk = mesh.node(k);
    report.m2_c1 = std::max(report.m2_c1, mesh.step(k) / (tau * std::pow(tk, 1.0 - 1.0 / gamma)));
    if (k >= 2) report.m2_c2 = std::max(report.m2_c2, tk / mesh.node(k - 1));
  }
  return report;
}

void write_mesh_csv(std::ostream& os, const TimeMesh& mesh) {
  os << "k,t_k,tau_k\n" << std::setprecision(17);
  for (std::size_t k = 0; k <= mesh.size(); ++k)
    os << k << ',' << mesh.node(k) << ',' << (k == 0 ? 0.0 : mesh.step(k)) << '\n';
}

}  // namespace tfac
