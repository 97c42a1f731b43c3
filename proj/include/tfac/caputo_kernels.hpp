#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "tfac/time_mesh.hpp"

namespace tfac {

class MeshTooShort : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Riemann-Liouville kernel omega_mu(t) = t^{mu-1} / Gamma(mu).
double omega(double mu, double t);

/// x^p - y^p for 0 <= y < x, evaluated from the gap x - y without
/// cancellation.
double power_difference(double y, double gap, double p);

/// Discrete Caputo kernels of the nonuniform Alikhanov formula collocated at
/// t_{n-theta}, theta = alpha/2. Entries are indexed by j = n - k:
///   a[j] = a^{(n)}_j, 0 <= j <= n-1
///   b[j] = b^{(n)}_j, 1 <= j <= n-1 (b[0] is unused and zero)
///   A[j] = A^{(n)}_j, 0 <= j <= n-1
struct AlikhanovKernels {
  std::size_t n = 0;
  double alpha = 0.0;
  double theta = 0.0;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> A;
};

AlikhanovKernels alikhanov_kernels(const TimeMesh& mesh, double alpha, std::size_t n);

/// Kernels for every step 1..N; element n-1 holds step n.
std::vector<AlikhanovKernels> all_alikhanov_kernels(const TimeMesh& mesh, double alpha);

/// sum_k A^{(n)}_{n-k} (v^k - v^{k-1}) for a scalar sequence v^0..v^n.
double alikhanov_apply(const AlikhanovKernels& kernels, std::span<const double> v);

/// L1 weights at t_n: w[j] multiplies (v^k - v^{k-1}) with j = n - k.
struct L1Kernels {
  std::size_t n = 0;
  double alpha = 0.0;
  std::vector<double> w;
};

L1Kernels l1_kernels(const TimeMesh& mesh, double alpha, std::size_t n);

/// P^{(n)}_{n-j} stored as P[n-j], 1 <= j <= n.
struct ComplementaryKernels {
  std::size_t n = 0;
  std::vector<double> P;
};

/// Requires kernels[j-1] to hold step j for j = 1..n.
ComplementaryKernels complementary_kernels(std::span<const AlikhanovKernels> kernels,
                                           std::size_t n);

struct PropertyCheck {
  bool ok = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::size_t worst_n = 0;
  std::size_t worst_k = 0;
  std::size_t violations = 0;

  void record(double margin, std::size_t n, std::size_t k);
};

/// Kernel property check for an M1 mesh. Margins are relative:
///   upper:     1 - A_0 / (24/11 * omega_{2-a}(tau_n)/tau_n)
///   lower:     A_{n-k} / (4/11 * L1 weight of cell k at t_n) - 1
///   monotone:  (A_{n-k-1} - A_{n-k}) / A_{n-k-1}
///   theta_gap: ((1-2 theta)/(1-theta) A_0 - A_1) / A_0   (n >= 2)
/// Violations are counted, never thrown.
struct KernelPropertyReport {
  bool m1_ok = true;
  PropertyCheck upper;
  PropertyCheck lower;
  PropertyCheck monotone;
  PropertyCheck theta_gap;

  bool all_ok() const { return upper.ok && lower.ok && monotone.ok && theta_gap.ok; }
};

KernelPropertyReport check_kernel_properties(std::span<const AlikhanovKernels> kernels,
                                             const TimeMesh& mesh);

/// CSV `n,k,a,b,A` for every step of the mesh.
void write_kernels_csv(std::ostream& os, std::span<const AlikhanovKernels> kernels);

}  // namespace tfac
