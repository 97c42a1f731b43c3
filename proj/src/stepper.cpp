#include "tfac/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <ostream>
#include <string>

#include "tfac/caputo_kernels.hpp"

namespace tfac {

SoeRange soe_range_for(const TimeMesh& mesh) {
  SoeRange r;
  r.horizon = mesh.final_time();
  r.min_step = mesh.step(1);
  if (mesh.size() >= 2) {
    r.min_step = mesh.step(2);
    for (std::size_t k = 3; k <= mesh.size(); ++k) r.min_step = std::min(r.min_step, mesh.step(k));
  }
  return r;
}

StepBounds step_constraint(double alpha, double theta, double h, double epsilon) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("step bound: alpha must lie in (0, 1)");
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidParameter("step bound: theta must lie in (0, 1)");
  if (!(h > 0.0 && epsilon > 0.0)) throw InvalidParameter("step bound: h and epsilon must be positive");
  const double w = omega(2.0 - alpha, 1.0 - theta);
  const double inv = 1.0 / alpha;
  StepBounds b;
  b.theta_bound = std::pow(theta * w / (2.0 * (1.0 - theta)), inv);
  b.diffusion_bound = std::pow(h * h * w / (4.0 * epsilon * epsilon), inv);
  b.solvability_bound = std::pow(w / (1.0 - theta), inv);
  b.gronwall_bound = std::pow(omega(2.0 - alpha, 1.0) / 11.0, inv);
  b.maximum_principle = std::min(b.theta_bound, b.diffusion_bound);
  b.min = std::min({b.theta_bound, b.diffusion_bound, b.solvability_bound, b.gronwall_bound});
  return b;
}

void write_monitors_csv(std::ostream& os, std::span<const MonitorRow> rows) {
  os << "n,t_n,tau_n,maxnorm,energy,iters\n" << std::setprecision(17);
  for (const auto& r : rows)
    os << r.n << ',' << r.t << ',' << r.tau << ',' << r.maxnorm << ',' << r.energy << ',' << r.iters
       << '\n';
}

// ---------------------------------------------------------------------------

DirectHistory::DirectHistory(double alpha, std::size_t length) : alpha_(alpha), length_(length) {}

void DirectHistory::require_step(const TimeMesh& mesh, std::size_t n) const {
  if (n != increments_.size() + 1)
    throw HistoryOutOfSync("direct history holds " + std::to_string(increments_.size()) +
                           " increments, step " + std::to_string(n) + " requested");
  if (n > mesh.size()) throw MeshTooShort("direct history: mesh has no step " + std::to_string(n));
}

double DirectHistory::alikhanov_weight(const TimeMesh& mesh, std::size_t n) const {
  require_step(mesh, n);
  return alikhanov_kernels(mesh, alpha_, n).A[0];
}

void DirectHistory::alikhanov_history(const TimeMesh& mesh, std::size_t n,
                                      std::span<double> out) const {
  require_step(mesh, n);
  std::fill(out.begin(), out.end(), 0.0);
  const auto K = alikhanov_kernels(mesh, alpha_, n);
  for (std::size_t k = 1; k < n; ++k) {
    const double a = K.A[n - k];
    const auto& inc = increments_[k - 1];
    for (std::size_t i = 0; i < length_; ++i) out[i] += a * inc[i];
  }
}

double DirectHistory::l1_weight(const TimeMesh& mesh, std::size_t n) const {
  require_step(mesh, n);
  return l1_kernels(mesh, alpha_, n).w[0];
}

void DirectHistory::l1_history(const TimeMesh& mesh, std::size_t n, std::span<double> out) const {
  require_step(mesh, n);
  std::fill(out.begin(), out.end(), 0.0);
  const auto L = l1_kernels(mesh, alpha_, n);
  for (std::size_t k = 1; k < n; ++k) {
    const double w = L.w[n - k];
    const auto& inc = increments_[k - 1];
    for (std::size_t i = 0; i < length_; ++i) out[i] += w * inc[i];
  }
}

void DirectHistory::commit(const TimeMesh& mesh, std::span<const double> increment) {
  require_step(mesh, increments_.size() + 1);
  if (increment.size() != length_) throw std::invalid_argument("direct history: size mismatch");
  increments_.emplace_back(increment.begin(), increment.end());
}

FastHistory::FastHistory(SoeModel model, std::size_t length, bool track_l1)
    : soe_(std::move(model), length, track_l1) {}

// ---------------------------------------------------------------------------

namespace {

struct NonlinearSystem {
  double c0;     // (c0 - c1 D_h) u + kappa u^3 = rhs
  double c1;
  double kappa;
};

double scaled_residual(const NonlinearSystem& sys, const Field& rhs, const Field& u) {
  const Field du = laplacian(u, sys.c1);
  double r = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
    r = std::max(r, std::abs(sys.c0 * u[k] - du[k] + sys.kappa * u[k] * u[k] * u[k] - rhs[k]));
  const double h = u.spacing();
  const double un = max_norm(u);
  const double scale = (std::abs(sys.c0) + 8.0 * sys.c1 / (h * h) + 3.0 * sys.kappa * un * un) *
                       std::max(1.0, un);
  return r / scale;
}

StepResult solve_nonlinear(SpectralSolver& solver, const NonlinearSystem& sys, const Field& rhs,
                           const Field& start, const SolverOptions& opt) {
  StepResult res;
  auto& st = res.stats;
  Field u = start;
  Field next(u.m(), u.length());
  Field work(u.m(), u.length());
  bool converged = false;

  // Plain fixed point, a contraction when c0 dominates the cubic's slope.
  if (sys.c0 > 0.0) {
    for (int it = 0; it < opt.fixed_point_limit && st.iterations < opt.max_iterations; ++it) {
      for (std::size_t k = 0; k < u.size(); ++k) work[k] = rhs[k] - sys.kappa * u[k] * u[k] * u[k];
      solver.solve(work, sys.c0, sys.c1, next);
      double d = 0.0;
      for (std::size_t k = 0; k < u.size(); ++k) d = std::max(d, std::abs(next[k] - u[k]));
      ++st.iterations;
      st.updates.push_back(d);
      std::swap(u, next);
      if (!std::isfinite(d)) break;
      if (d <= opt.eta) {
        converged = true;
        break;
      }
      const std::size_t m = st.updates.size();
      if (m >= 3 && d > st.updates[m - 2] && st.updates[m - 2] > st.updates[m - 3]) break;
    }
  }

  // Shifted iteration from the previous solution: adding beta u on both sides
  // makes the explicit part monotone when beta >= 3 kappa |u|^2.
  if (!converged) {
    st.fallback = true;
    u = start;
    while (st.iterations < opt.max_iterations) {
      const double un = std::max(1.0, max_norm(u));
      const double beta = 3.0 * sys.kappa * un * un;
      if (!(sys.c0 + beta > 0.0))
        throw NonconvergenceError("nonlinear solve: shifted operator is not positive", st.updates);
      for (std::size_t k = 0; k < u.size(); ++k)
        work[k] = rhs[k] - sys.kappa * u[k] * u[k] * u[k] + beta * u[k];
      solver.solve(work, sys.c0 + beta, sys.c1, next);
      double d = 0.0;
      for (std::size_t k = 0; k < u.size(); ++k) d = std::max(d, std::abs(next[k] - u[k]));
      ++st.iterations;
      st.updates.push_back(d);
      std::swap(u, next);
      if (!std::isfinite(d)) break;
      if (d <= opt.eta) {
        converged = true;
        break;
      }
    }
  }

  if (!u.all_finite())
    throw NonconvergenceError("nonlinear solve produced non-finite values", st.updates);
  if (!converged)
    throw NonconvergenceError("nonlinear solve did not converge in " +
                                  std::to_string(st.iterations) + " iterations",
                              st.updates);
  st.residual = scaled_residual(sys, rhs, u);
  res.u = std::move(u);
  return res;
}

}  // namespace

Simulation::Simulation(Problem problem, SolverOptions options, SoeRange range)
    : problem_(std::move(problem)), options_(options), nodes_{0.0}, u_(problem_.initial) {
  const double alpha = problem_.alpha;
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
  if (!(problem_.epsilon > 0.0)) throw InvalidParameter("epsilon must be positive");
  if (u_.m() < 4) throw InvalidParameter("initial field is not set");
  if (!u_.all_finite()) throw InvalidParameter("initial field has non-finite values");
  if (options_.eta <= 0.0 || options_.max_iterations <= 0 || options_.fixed_point_limit < 0)
    throw InvalidParameter("invalid nonlinear solver settings");
  theta_ = 0.5 * alpha;
  bounds_ = step_constraint(alpha, theta_, u_.spacing(), problem_.epsilon);

  const std::size_t len = u_.size();
  if (options_.mode == HistoryMode::direct) {
    history_ = std::make_unique<DirectHistory>(alpha, len);
  } else {
    if (!(range.min_step > 0.0 && range.horizon > 0.0))
      throw InvalidParameter("fast history needs the smallest step and the final time");
    const double cut = (1.0 - theta_) * range.min_step;
    auto model = build_soe(alpha, options_.soe_eps, cut, std::max(range.horizon, 2.0 * cut));
    history_ = std::make_unique<FastHistory>(std::move(model), len, options_.l1_companion);
  }
  solver_ = std::make_unique<SpectralSolver>(u_.m(), u_.length());
  monitors_.push_back({0, 0.0, 0.0, max_norm(u_), energy(u_, problem_.epsilon), 0});
}

Simulation::~Simulation() = default;

double Simulation::last_step() const {
  if (steps() == 0) throw std::logic_error("no step has been taken");
  return nodes_[nodes_.size() - 1] - nodes_[nodes_.size() - 2];
}

const SoeModel* Simulation::soe_model() const {
  if (auto* fast = dynamic_cast<const FastHistory*>(history_.get())) return &fast->model();
  return nullptr;
}

void Simulation::forcing_at(double t, Field& out) const { problem_.forcing(t, out); }

StepResult Simulation::trial(double tau, Scheme scheme) const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidParameter("step size must be positive");
  return trial_to(time() + tau, scheme);
}

StepResult Simulation::trial_to(double t_next, Scheme scheme) const {
  std::vector<double> nodes = nodes_;
  nodes.push_back(t_next);
  const TimeMesh mesh(std::move(nodes));
  const std::size_t n = mesh.size();
  const double e2 = problem_.epsilon * problem_.epsilon;
  const Field& up = u_;

  Field hist(up.m(), up.length());
  Field rhs(up.m(), up.length());
  NonlinearSystem sys{};
  double w = 0.0;
  if (scheme == Scheme::alikhanov) {
    w = history_->alikhanov_weight(mesh, n);
    history_->alikhanov_history(mesh, n, hist.values());
    sys = {w - (1.0 - theta_), (1.0 - theta_) * e2, 1.0 - theta_};
    const Field lap = laplacian(up, theta_ * e2);
    for (std::size_t k = 0; k < up.size(); ++k) {
      const double u = up[k];
      rhs[k] = w * u - hist[k] + lap[k] - theta_ * (u * u * u - u);
    }
  } else {
    w = history_->l1_weight(mesh, n);
    history_->l1_history(mesh, n, hist.values());
    sys = {w - 1.0, e2, 1.0};
    for (std::size_t k = 0; k < up.size(); ++k) rhs[k] = w * up[k] - hist[k];
  }

  if (problem_.forcing) {
    Field g(up.m(), up.length());
    const double tn = mesh.node(n);
    if (scheme == Scheme::l1_euler) {
      forcing_at(tn, g);
    } else if (options_.forcing_point == ForcingPoint::weighted && n >= 2) {
      Field g0(up.m(), up.length());
      forcing_at(mesh.node(n - 1), g0);
      forcing_at(tn, g);
      for (std::size_t k = 0; k < g.size(); ++k) g[k] = theta_ * g0[k] + (1.0 - theta_) * g[k];
    } else {
      forcing_at(mesh.offset_point(n, theta_), g);
    }
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] += g[k];
  }
  return solve_nonlinear(*solver_, sys, rhs, up, options_);
}

void Simulation::check_bound(double tau) {
  if (options_.step_bound == StepBoundPolicy::ignore || tau <= bounds_.min * (1.0 + 1e-12)) return;
  ++bound_violations_;
  if (options_.step_bound == StepBoundPolicy::strict)
    throw StepBoundViolation("step " + std::to_string(tau) + " exceeds the maximum-principle bound " +
                             std::to_string(bounds_.min));
  if (bound_violations_ == 1)
    std::cerr << "warning: step " << tau << " exceeds the sufficient step bound " << bounds_.min
              << "; continuing\n";
}

void Simulation::commit(double tau, const Field& u, const SolveStats& stats) {
  commit_to(time() + tau, u, stats);
}

void Simulation::commit_to(double t_next, const Field& u, const SolveStats& stats) {
  if (!u.same_shape(u_)) throw std::invalid_argument("commit: field shape mismatch");
  std::vector<double> nodes = nodes_;
  nodes.push_back(t_next);
  const TimeMesh mesh(nodes);
  std::vector<double> inc(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) inc[k] = u[k] - u_[k];
  history_->commit(mesh, inc);
  nodes_ = std::move(nodes);
  u_ = u;
  last_stats_ = stats;
  monitors_.push_back({steps(), time(), mesh.step(mesh.size()), max_norm(u_),
                       energy(u_, problem_.epsilon), stats.iterations});
}

const SolveStats& Simulation::advance(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidParameter("step size must be positive");
  return advance_to(time() + tau);
}

const SolveStats& Simulation::advance_to(double t_next) {
  check_bound(t_next - time());
  StepResult r = trial_to(t_next, Scheme::alikhanov);
  commit_to(t_next, r.u, r.stats);
  return last_stats_;
}

Field Simulation::advance_l1_euler(double tau) const { return trial(tau, Scheme::l1_euler).u; }

void Simulation::run(const TimeMesh& mesh, const std::function<void(const Simulation&)>& observer) {
  if (mesh.size() < steps())
    throw MeshTooShort("run: mesh is shorter than the accepted history");
  for (std::size_t k = 1; k <= steps(); ++k)
    if (mesh.node(k) != nodes_[k]) throw InvalidParameter("run: mesh does not extend the accepted nodes");
  for (std::size_t n = steps() + 1; n <= mesh.size(); ++n) {
    advance_to(mesh.node(n));
    if (observer) observer(*this);
  }
}

}  // namespace tfac
