#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace tfac {

class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Deterministic 64-bit generator used for every random mesh and initial
/// field. The engine is std::mt19937_64, whose output sequence is fixed by
/// the standard; the conversion to (0,1) is done here rather than through
/// std::uniform_real_distribution so results are identical across standard
/// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform draw from the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_open(); }

 private:
  std::mt19937_64 engine_;
};

/// Strictly increasing time levels 0 = t_0 < t_1 < ... < t_N = T.
///
/// Nodes are the primary data; step sizes tau_k = t_k - t_{k-1} and ratios
/// rho_k = tau_k / tau_{k+1} are derived once at construction. Indices follow
/// the usual 1-based convention for steps: step(1) is the first cell.
class TimeMesh {
 public:
  explicit TimeMesh(std::vector<double> nodes);

  /// Number of cells N.
  std::size_t size() const { return nodes_.size() - 1; }
  double node(std::size_t k) const { return nodes_.at(k); }
  double step(std::size_t k) const;
  double ratio(std::size_t k) const;
  double final_time() const { return nodes_.back(); }
  double max_step() const;
  double min_step() const;

  /// t_{k-theta} = (1 - theta) t_k + theta t_{k-1}.
  double offset_point(std::size_t k, double theta) const;

  std::span<const double> nodes() const { return nodes_; }

  /// Copy with one more cell of length tau appended.
  TimeMesh extended(double tau) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> steps_;  // steps_[k-1] = tau_k
};

struct MeshReport {
  double max_step = 0.0;
  double max_ratio = 0.0;
  bool m1_ok = true;
  std::size_t m1_violations = 0;
  double m2_gamma = 1.0;
  double m2_c1 = 0.0;  // smallest C with tau_k <= tau * C * t_k^{1-1/gamma}
  double m2_c2 = 0.0;  // smallest C with t_k <= C * t_{k-1}, k >= 2
};

inline constexpr double kMaxStepRatio = 7.0 / 4.0;

/// t_k = T0 (k/N0)^gamma, k = 0..N0.
TimeMesh build_graded(double t0, std::size_t n0, double gamma);

/// Uniform mesh on [0, T] with n cells.
TimeMesh build_uniform(double final_time, std::size_t n);

/// Appends n1 cells on [last node, T] with sizes (T - T0) eps_k / sum eps,
/// eps_k drawn from Rng(seed). The final node is set to T exactly.
TimeMesh append_random_tail(const TimeMesh& mesh, double final_time, std::size_t n1,
                            std::uint64_t seed);

/// Appends cells of equal size on [last node, T].
TimeMesh append_uniform_tail(const TimeMesh& mesh, double final_time, std::size_t n1);

/// Graded start on [0, T0] followed by a random tail on [T0, T], N cells in
/// total. T0 <= 0 selects min(1/gamma, T); n0 == 0 selects N/2 (all N cells
/// when T0 reaches T).
TimeMesh build_two_part(double final_time, std::size_t n, double gamma, double t0,
                        std::size_t n0, std::uint64_t seed);

/// Random mesh on [0, T] whose step ratios are drawn from [rho_lo, rho_hi];
/// with rho_hi < 7/4 the result satisfies M1.
TimeMesh random_ratio_mesh(double final_time, std::size_t n, std::uint64_t seed,
                           double rho_lo = 0.25, double rho_hi = 1.74);

MeshReport check_m1(const TimeMesh& mesh);
MeshReport check_m2(const TimeMesh& mesh, double gamma);

/// CSV with header `k,t_k,tau_k` (tau_0 written as 0).
void write_mesh_csv(std::ostream& os, const TimeMesh& mesh);

}  // namespace tfac
