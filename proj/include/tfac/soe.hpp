#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "tfac/time_mesh.hpp"

namespace tfac {

class SoeConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HistoryOutOfSync : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// omega_{1-alpha}(t) ~ sum_l weights[l] * exp(-nodes[l] * t) on [dt_cut, horizon].
struct SoeModel {
  double alpha = 0.0;
  double eps = 0.0;
  double dt_cut = 0.0;
  double horizon = 0.0;
  std::vector<double> nodes;    // strictly increasing, positive
  std::vector<double> weights;  // positive

  std::size_t size() const { return nodes.size(); }
  double evaluate(double t) const;
};

struct SoeOptions {
  std::size_t max_terms = 512;
  /// Relative floor for the accuracy target: where omega_{1-alpha}(t) is so
  /// large that eps is below double resolution, the target becomes
  /// relative_floor * omega(t).
  double relative_floor = 1e-14;
  std::size_t check_points = 2000;
};

/// Builds an SOE model from the Laplace representation
///   omega_{1-alpha}(t) = sin(pi alpha)/pi * int_0^inf exp(-s t) s^{alpha-1} ds,
/// using Gauss-Jacobi quadrature on [0, 1/T] and composite Gauss-Legendre
/// panels in log(s) up to a cutoff set by dt_cut and eps. Negligible terms are
/// pruned afterwards.
SoeModel build_soe(double alpha, double eps, double dt_cut, double horizon,
                   const SoeOptions& options = {});

/// Largest |omega_{1-alpha}(t) - SOE(t)| over `samples` log-spaced points of
/// [dt_cut, horizon].
double soe_max_error(const SoeModel& model, std::size_t samples);

/// CSV `l,s,w`.
void write_soe_csv(std::ostream& os, const SoeModel& model);

/// Gauss-Jacobi rule for weight (1-x)^a (1+x)^b on [-1, 1] (Golub-Welsch).
struct QuadratureRule {
  std::vector<double> x;
  std::vector<double> w;
};
QuadratureRule gauss_jacobi(std::size_t n, double a, double b);

/// Per-mode coefficients of the history recursion over cell k:
///   decay = exp(-s (theta tau_k + (1-theta) tau_{k+1}))
///   a     = (1/tau_k) int_cell exp(-s (t_{k+1-theta} - u)) du
///   b     = 2/(tau_k (tau_k + tau_{k+1})) int_cell (u - t_{k-1/2}) exp(-s (t_{k+1-theta} - u)) du
struct SoeCellCoefficients {
  double decay = 1.0;
  double a = 1.0;
  double b = 0.0;
};
SoeCellCoefficients soe_cell_coefficients(double s, double tau_k, double tau_next, double theta);

/// One step of the exponential-mode recursion: H^l(k) collects cells 1..k
/// referenced at t_{k+1-theta}; this maps H^l(k-1) to H^l(k). `h` holds
/// size() blocks of `inc_k.size()` values.
void advance_history(std::span<double> h, const SoeModel& model, const TimeMesh& mesh,
                     std::size_t k, std::span<const double> inc_k,
                     std::span<const double> inc_next);

/// History state of the fast Caputo evaluation for a vector of unknowns.
///
/// After level() = m committed increments the state holds H^l(t_{m-1}) for
/// the Alikhanov collocation, the last increment (needed because cell m-1's
/// quadratic interpolant involves increment m), and G^l(t_m) = int_0^{t_m}
/// exp(-s (t_m - u)) v'(u) du for the L1 companion. Evaluations for a trial
/// step never modify the state; only commit() does.
class SoeHistory {
 public:
  /// `track_l1` keeps the G^l accumulators needed by l1_history().
  SoeHistory(SoeModel model, std::size_t length, bool track_l1 = true);

  const SoeModel& model() const { return model_; }
  std::size_t length() const { return length_; }
  std::size_t level() const { return level_; }
  bool tracks_l1() const { return track_l1_; }

  /// Coefficient W and known part R of the Alikhanov approximation at step
  /// n = level()+1: value = W * (v^n - v^{n-1}) + R.
  double alikhanov_weight(const TimeMesh& mesh, std::size_t n) const;
  void alikhanov_history(const TimeMesh& mesh, std::size_t n, std::span<double> out) const;

  /// Same split for the L1 formula collocated at t_n.
  double l1_weight(const TimeMesh& mesh, std::size_t n) const;
  void l1_history(const TimeMesh& mesh, std::size_t n, std::span<double> out) const;

  /// Fast Alikhanov approximation at t_{n-theta} given increment n.
  void apply(const TimeMesh& mesh, std::size_t n, std::span<const double> increment,
             std::span<double> out) const;

  /// Commits increment n = level()+1; mesh must contain step n.
  void commit(const TimeMesh& mesh, std::span<const double> increment);

 private:
  void require_step(const TimeMesh& mesh, std::size_t n) const;

  SoeModel model_;
  std::size_t length_;
  std::size_t level_ = 0;
  bool track_l1_;
  double theta_;
  std::vector<double> h_;
  std::vector<double> g_;
  std::vector<double> pending_;
};

}  // namespace tfac
