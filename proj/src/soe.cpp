#include "tfac/soe.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <string>

#include "tfac/caputo_kernels.hpp"

namespace tfac {

double SoeModel::evaluate(double t) const {
  long double sum = 0.0L;
  for (std::size_t l = 0; l < nodes.size(); ++l)
    sum += static_cast<long double>(weights[l]) * std::exp(-static_cast<long double>(nodes[l]) * t);
  return static_cast<double>(sum);
}

QuadratureRule gauss_jacobi(std::size_t n, double a, double b) {
  if (n == 0) throw InvalidParameter("gauss_jacobi: need at least one node");
  if (!(a > -1.0 && b > -1.0)) throw InvalidParameter("gauss_jacobi: exponents must exceed -1");
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(n > 1 ? n - 1 : 1);
  const double ab = a + b;
  diag(0) = (b - a) / (ab + 2.0);
  for (std::size_t k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    const double s = 2.0 * kk + ab;
    diag(k) = (b * b - a * a) / (s * (s + 2.0));
    sub(k - 1) = std::sqrt(4.0 * kk * (kk + a) * (kk + b) * (kk + ab) /
                           (s * s * (s + 1.0) * (s - 1.0)));
  }
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) +
                              std::lgamma(b + 1.0) - std::lgamma(ab + 2.0));
  QuadratureRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  if (n == 1) {
    rule.x[0] = diag(0);
    rule.w[0] = mu0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("gauss_jacobi: eigenvalue iteration failed");
  for (std::size_t i = 0; i < n; ++i) {
    rule.x[i] = solver.eigenvalues()(i);
    const double v = solver.eigenvectors()(0, i);
    rule.w[i] = mu0 * v * v;
  }
  return rule;
}

namespace {

double exact_kernel(double alpha, double t) { return omega(1.0 - alpha, t); }

std::vector<double> check_grid(double lo, double hi, std::size_t count) {
  std::vector<double> t(count);
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    t[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(count - 1));
  t.front() = lo;
  t.back() = hi;
  return t;
}

// Worst ratio |error| / target over the grid.
double worst_ratio(const SoeModel& m, const std::vector<double>& grid, double floor) {
  double worst = 0.0;
  for (double t : grid) {
    const double exact = exact_kernel(m.alpha, t);
    const double target = std::max(m.eps, floor * exact);
    worst = std::max(worst, std::abs(m.evaluate(t) - exact) / target);
  }
  return worst;
}

void sort_terms(SoeModel& m) {
  std::vector<std::size_t> order(m.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return m.nodes[i] < m.nodes[j]; });
  std::vector<double> s(m.size()), w(m.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    s[i] = m.nodes[order[i]];
    w[i] = m.weights[order[i]];
  }
  m.nodes = std::move(s);
  m.weights = std::move(w);
}

}  // namespace

SoeModel build_soe(double alpha, double eps, double dt_cut, double horizon,
                   const SoeOptions& options) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("SOE: alpha must lie in (0, 1)");
  if (!(eps > 0.0)) throw InvalidParameter("SOE: tolerance must be positive");
  if (!(dt_cut > 0.0)) throw InvalidParameter("SOE: cutoff must be positive");
  if (!(horizon > dt_cut)) throw InvalidParameter("SOE: horizon must exceed the cutoff");

  const double c = std::sin(M_PI * alpha) / M_PI;
  const double floor = options.relative_floor;
  const double tail_target = std::max(eps, floor * exact_kernel(alpha, dt_cut)) / 8.0;

  // Upper cutoff S: c S^{alpha-1} exp(-S dt) / dt bounds the neglected tail.
  double s_hi = 1.0 / dt_cut;
  while (c * std::pow(s_hi, alpha - 1.0) * std::exp(-s_hi * dt_cut) / dt_cut > tail_target)
    s_hi *= 1.1;
  const double s0 = 1.0 / horizon;
  const double x_lo = std::log(s0);
  const double x_hi = std::log(s_hi);
  const std::size_t panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(x_hi - x_lo)));
  const double width = (x_hi - x_lo) / static_cast<double>(panels);

  const QuadratureRule jacobi = gauss_jacobi(16, 0.0, alpha - 1.0);
  const auto grid = check_grid(dt_cut, horizon, options.check_points);

  auto assemble = [&](std::size_t order) {
    SoeModel m;
    m.alpha = alpha;
    m.eps = eps;
    m.dt_cut = dt_cut;
    m.horizon = horizon;
    const double scale = c * std::pow(0.5 * s0, alpha);
    for (std::size_t i = 0; i < jacobi.x.size(); ++i) {
      m.nodes.push_back(0.5 * s0 * (1.0 + jacobi.x[i]));
      m.weights.push_back(scale * jacobi.w[i]);
    }
    const QuadratureRule legendre = gauss_jacobi(order, 0.0, 0.0);
    for (std::size_t p = 0; p < panels; ++p) {
      const double mid = x_lo + (static_cast<double>(p) + 0.5) * width;
      for (std::size_t i = 0; i < order; ++i) {
        const double x = mid + 0.5 * width * legendre.x[i];
        m.nodes.push_back(std::exp(x));
        m.weights.push_back(c * 0.5 * width * legendre.w[i] * std::exp(alpha * x));
      }
    }
    return m;
  };

  SoeModel model;
  double ratio = 0.0;
  bool found = false;
  for (std::size_t order = 4; order <= 40; ++order) {
    model = assemble(order);
    ratio = worst_ratio(model, grid, floor);
    if (ratio <= 0.5) {
      found = true;
      break;
    }
  }
  if (!found)
    throw SoeConvergenceError("SOE: quadrature did not reach the tolerance (worst error/target " +
                              std::to_string(ratio) + ")");

  // Drop the terms with the smallest possible contribution on [dt_cut, T].
  std::vector<std::size_t> order(model.size());
  std::iota(order.begin(), order.end(), 0);
  auto contribution = [&](std::size_t l) { return model.weights[l] * std::exp(-model.nodes[l] * dt_cut); };
  std::sort(order.begin(), order.end(),
            [&](auto i, auto j) { return contribution(i) < contribution(j); });
  double dropped = 0.0;
  std::vector<bool> keep(model.size(), true);
  for (std::size_t l : order) {
    if (dropped + contribution(l) > eps / 16.0) break;
    dropped += contribution(l);
    keep[l] = false;
  }
  SoeModel pruned = model;
  pruned.nodes.clear();
  pruned.weights.clear();
  for (std::size_t l = 0; l < model.size(); ++l)
    if (keep[l]) {
      pruned.nodes.push_back(model.nodes[l]);
      pruned.weights.push_back(model.weights[l]);
    }
  if (worst_ratio(pruned, grid, floor) <= 1.0) model = std::move(pruned);
  sort_terms(model);

  if (model.size() > options.max_terms)
    throw SoeConvergenceError("SOE: " + std::to_string(model.size()) + " terms exceed the limit of " +
                              std::to_string(options.max_terms));
  return model;
}

double soe_max_error(const SoeModel& model, std::size_t samples) {
  if (samples < 2) throw InvalidParameter("soe_max_error: need at least two samples");
  double worst = 0.0;
  for (double t : check_grid(model.dt_cut, model.horizon, samples))
    worst = std::max(worst, std::abs(model.evaluate(t) - exact_kernel(model.alpha, t)));
  return worst;
}

void write_soe_csv(std::ostream& os, const SoeModel& model) {
  os << "l,s,w\n" << std::setprecision(17);
  for (std::size_t l = 0; l < model.size(); ++l)
    os << l << ',' << model.nodes[l] << ',' << model.weights[l] << '\n';
}

namespace {

// (1 - exp(-x)) / x
double phi(double x) {
  if (x < 1e-8) return 1.0 - 0.5 * x;
  return -std::expm1(-x) / x;
}

// (x cosh x - sinh x) / x^2 = sum_{j>=1} 2j x^{2j-1} / (2j+1)!
double psi_series(double x) {
  const double x2 = x * x;
  double pw = x;             // x^{2j-1}
  double fact = 6.0;         // (2j+1)!
  double sum = 0.0;
  for (int j = 1; j < 40; ++j) {
    const double term = 2.0 * j * pw / fact;
    sum += term;
    if (term <= 1e-18 * sum) break;
    pw *= x2;
    fact *= (2.0 * j + 2.0) * (2.0 * j + 3.0);
  }
  return sum;
}

}  // namespace

SoeCellCoefficients soe_cell_coefficients(double s, double tau_k, double tau_next, double theta) {
  SoeCellCoefficients c;
  const double delta = (1.0 - theta) * tau_next;
  c.decay = std::exp(-s * (theta * tau_k + delta));
  const double near = std::exp(-s * delta);
  c.a = near * phi(s * tau_k);
  const double x = 0.5 * s * tau_k;
  double e_psi;
  if (x < 0.5) {
    e_psi = std::exp(-s * (delta + 0.5 * tau_k)) * psi_series(x);
  } else {
    const double e2 = std::exp(-2.0 * x);
    e_psi = near * (x * (1.0 + e2) - (1.0 - e2)) / (2.0 * x * x);
  }
  c.b = tau_k / (tau_k + tau_next) * e_psi;
  return c;
}

void advance_history(std::span<double> h, const SoeModel& model, const TimeMesh& mesh,
                     std::size_t k, std::span<const double> inc_k,
                     std::span<const double> inc_next) {
  const std::size_t len = inc_k.size();
  if (inc_next.size() != len || h.size() != len * model.size())
    throw std::invalid_argument("advance_history: size mismatch");
  const double theta = 0.5 * model.alpha;
  const double tau_k = mesh.step(k);
  const double tau_next = mesh.step(k + 1);
  const double rho = tau_k / tau_next;
  for (std::size_t l = 0; l < model.size(); ++l) {
    const auto c = soe_cell_coefficients(model.nodes[l], tau_k, tau_next, theta);
    const double ca = c.a - c.b;
    const double cb = c.b * rho;
    double* hl = h.data() + l * len;
    for (std::size_t i = 0; i < len; ++i) hl[i] = c.decay * hl[i] + ca * inc_k[i] + cb * inc_next[i];
  }
}

SoeHistory::SoeHistory(SoeModel model, std::size_t length, bool track_l1)
    : model_(std::move(model)),
      length_(length),
      track_l1_(track_l1),
      theta_(0.5 * model_.alpha),
      h_(model_.size() * length, 0.0),
      g_(track_l1 ? model_.size() * length : 0, 0.0),
      pending_(length, 0.0) {}

void SoeHistory::require_step(const TimeMesh& mesh, std::size_t n) const {
  if (n != level_ + 1)
    throw HistoryOutOfSync("SOE history is at level " + std::to_string(level_) +
                           ", step " + std::to_string(n) + " requested");
  if (n > mesh.size())
    throw MeshTooShort("SOE history: mesh has no step " + std::to_string(n));
  if (n >= 2 && (1.0 - theta_) * mesh.step(n) < model_.dt_cut * (1.0 - 1e-12))
    throw InvalidParameter("SOE history: step " + std::to_string(n) +
                           " is below the SOE cutoff");
}

double SoeHistory::alikhanov_weight(const TimeMesh& mesh, std::size_t n) const {
  require_step(mesh, n);
  const double alpha = model_.alpha;
  const double tau_n = mesh.step(n);
  double w = std::pow((1.0 - theta_) * tau_n, 1.0 - alpha) / (std::tgamma(2.0 - alpha) * tau_n);
  if (n == 1) return w;
  const double tau_prev = mesh.step(n - 1);
  const double rho = tau_prev / tau_n;
  for (std::size_t l = 0; l < model_.size(); ++l)
    w += model_.weights[l] * rho *
         soe_cell_coefficients(model_.nodes[l], tau_prev, tau_n, theta_).b;
  return w;
}

void SoeHistory::alikhanov_history(const TimeMesh& mesh, std::size_t n, std::span<double> out) const {
  require_step(mesh, n);
  if (out.size() != length_) throw std::invalid_argument("alikhanov_history: size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  if (n == 1) return;
  const double tau_prev = mesh.step(n - 1);
  const double tau_n = mesh.step(n);
  double pending_coeff = 0.0;
  for (std::size_t l = 0; l < model_.size(); ++l) {
    const auto c = soe_cell_coefficients(model_.nodes[l], tau_prev, tau_n, theta_);
    const double wd = model_.weights[l] * c.decay;
    pending_coeff += model_.weights[l] * (c.a - c.b);
    const double* hl = h_.data() + l * length_;
    for (std::size_t i = 0; i < length_; ++i) out[i] += wd * hl[i];
  }
  for (std::size_t i = 0; i < length_; ++i) out[i] += pending_coeff * pending_[i];
}

double SoeHistory::l1_weight(const TimeMesh& mesh, std::size_t n) const {
  require_step(mesh, n);
  const double tau_n = mesh.step(n);
  return std::pow(tau_n, -model_.alpha) / std::tgamma(2.0 - model_.alpha);
}

void SoeHistory::l1_history(const TimeMesh& mesh, std::size_t n, std::span<double> out) const {
  require_step(mesh, n);
  if (out.size() != length_) throw std::invalid_argument("l1_history: size mismatch");
  if (!track_l1_) throw std::logic_error("l1_history: L1 accumulators were not requested");
  std::fill(out.begin(), out.end(), 0.0);
  if (n == 1) return;
  const double tau_n = mesh.step(n);
  for (std::size_t l = 0; l < model_.size(); ++l) {
    const double wd = model_.weights[l] * std::exp(-model_.nodes[l] * tau_n);
    const double* gl = g_.data() + l * length_;
    for (std::size_t i = 0; i < length_; ++i) out[i] += wd * gl[i];
  }
}

void SoeHistory::apply(const TimeMesh& mesh, std::size_t n, std::span<const double> increment,
                       std::span<double> out) const {
  if (increment.size() != length_) throw std::invalid_argument("apply: size mismatch");
  alikhanov_history(mesh, n, out);
  const double w = alikhanov_weight(mesh, n);
  for (std::size_t i = 0; i < length_; ++i) out[i] += w * increment[i];
}

void SoeHistory::commit(const TimeMesh& mesh, std::span<const double> increment) {
  const std::size_t n = level_ + 1;
  require_step(mesh, n);
  if (increment.size() != length_) throw std::invalid_argument("commit: size mismatch");
  if (n >= 2) advance_history(h_, model_, mesh, n - 1, pending_, increment);
  const double tau_n = mesh.step(n);
  for (std::size_t l = 0; track_l1_ && l < model_.size(); ++l) {
    const double s = model_.nodes[l];
    const double decay = std::exp(-s * tau_n);
    const double ph = phi(s * tau_n);
    double* gl = g_.data() + l * length_;
    for (std::size_t i = 0; i < length_; ++i) gl[i] = decay * gl[i] + ph * increment[i];
  }
  std::copy(increment.begin(), increment.end(), pending_.begin());
  level_ = n;
}

}  // namespace tfac
