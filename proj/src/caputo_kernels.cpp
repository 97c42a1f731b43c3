#include "tfac/caputo_kernels.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>

namespace tfac {

double omega(double mu, double t) {
  if (!(mu > 0.0)) throw std::domain_error("omega: order must be positive");
  if (!(t > 0.0)) throw std::domain_error("omega: argument must be positive");
  return std::pow(t, mu - 1.0) / std::tgamma(mu);
}

double power_difference(double y, double gap, double p) {
  if (y == 0.0) return std::pow(gap, p);
  return std::pow(y, p) * std::expm1(p * std::log1p(gap / y));
}

namespace {

// J(r) = int_{-r}^{r} z (1+z)^{-alpha} dz, 0 < r < 1.
double centered_power_moment(double r, double alpha) {
  if (r < 0.5) {
    // Only odd powers of the binomial series survive the symmetric integral.
    double coeff = 1.0;  // binom(-alpha, j)
    double rpow = r * r;
    double sum = 0.0;
    for (int j = 1; j < 200; ++j) {
      coeff *= (-alpha - (j - 1)) / j;
      rpow *= r;
      if (j % 2 == 1) {
        const double term = 2.0 * coeff * rpow / (j + 2);
        sum += term;
        if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
      }
    }
    return sum;
  }
  auto antiderivative = [alpha](double z) {
    return std::pow(1.0 + z, 2.0 - alpha) / (2.0 - alpha) -
           std::pow(1.0 + z, 1.0 - alpha) / (1.0 - alpha);
  };
  return antiderivative(r) - antiderivative(-r);
}

// int_{cell} (s - s_mid) omega_{1-alpha}(c - s) ds for a cell of width tau whose
// right end lies a distance d > 0 before c.
double first_moment(double d, double tau, double alpha) {
  const double xm = d + 0.5 * tau;
  const double r = 0.5 * tau / xm;
  return -std::pow(xm, 2.0 - alpha) / std::tgamma(1.0 - alpha) *
         centered_power_moment(r, alpha);
}

void check_step(const TimeMesh& mesh, double alpha, std::size_t n) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidParameter("fractional order must lie in (0, 1)");
  if (n == 0 || n > mesh.size())
    throw MeshTooShort("step " + std::to_string(n) + " requested on a mesh with " +
                       std::to_string(mesh.size()) + " cells");
}

}  // namespace

AlikhanovKernels alikhanov_kernels(const TimeMesh& mesh, double alpha, std::size_t n) {
  check_step(mesh, alpha, n);
  const double theta = 0.5 * alpha;
  const double g2 = std::tgamma(2.0 - alpha);
  AlikhanovKernels K;
  K.n = n;
  K.alpha = alpha;
  K.theta = theta;
  K.a.assign(n, 0.0);
  K.b.assign(n, 0.0);
  K.A.assign(n, 0.0);

  const double tau_n = mesh.step(n);
  const double tn = mesh.node(n);
  K.a[0] = std::pow((1.0 - theta) * tau_n, 1.0 - alpha) / (g2 * tau_n);
  for (std::size_t k = 1; k < n; ++k) {
    const double tau_k = mesh.step(k);
    // distance from t_{n-theta} to the right end of cell k
    const double d = (tn - mesh.node(k)) - theta * tau_n;
    const std::size_t j = n - k;
    K.a[j] = power_difference(d, tau_k, 1.0 - alpha) / (g2 * tau_k);
    K.b[j] = 2.0 * first_moment(d, tau_k, alpha) / (tau_k * (tau_k + mesh.step(k + 1)));
  }

  if (n == 1) {
    K.A[0] = K.a[0];
    return K;
  }
  K.A[0] = K.a[0] + mesh.ratio(n - 1) * K.b[1];
  for (std::size_t k = 2; k < n; ++k)
    K.A[n - k] = K.a[n - k] + mesh.ratio(k - 1) * K.b[n - k + 1] - K.b[n - k];
  K.A[n - 1] = K.a[n - 1] - K.b[n - 1];
  return K;
}

std::vector<AlikhanovKernels> all_alikhanov_kernels(const TimeMesh& mesh, double alpha) {
  std::vector<AlikhanovKernels> out;
  out.reserve(mesh.size());
  for (std::size_t n = 1; n <= mesh.size(); ++n) out.push_back(alikhanov_kernels(mesh, alpha, n));
  return out;
}

double alikhanov_apply(const AlikhanovKernels& kernels, std::span<const double> v) {
  if (v.size() < kernels.n + 1)
    throw std::invalid_argument("alikhanov_apply: need values v^0..v^n");
  double sum = 0.0;
  for (std::size_t k = 1; k <= kernels.n; ++k) sum += kernels.A[kernels.n - k] * (v[k] - v[k - 1]);
  return sum;
}

L1Kernels l1_kernels(const TimeMesh& mesh, double alpha, std::size_t n) {
  check_step(mesh, alpha, n);
  const double g2 = std::tgamma(2.0 - alpha);
  L1Kernels L;
  L.n = n;
  L.alpha = alpha;
  L.w.assign(n, 0.0);
  const double tn = mesh.node(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const double tau_k = mesh.step(k);
    const double d = k == n ? 0.0 : tn - mesh.node(k);
    L.w[n - k] = power_difference(d, tau_k, 1.0 - alpha) / (g2 * tau_k);
  }
  return L;
}

ComplementaryKernels complementary_kernels(std::span<const AlikhanovKernels> kernels,
                                           std::size_t n) {
  if (n == 0 || kernels.size() < n)
    throw MeshTooShort("complementary kernels need Alikhanov kernels for steps 1..n");
  for (std::size_t j = 1; j <= n; ++j)
    if (!(kernels[j - 1].A[0] > 0.0))
      throw std::domain_error("complementary kernels: A^{(" + std::to_string(j) +
                              ")}_0 is not positive");
  ComplementaryKernels P;
  P.n = n;
  P.P.assign(n, 0.0);
  P.P[0] = 1.0 / kernels[n - 1].A[0];
  for (std::size_t j = n - 1; j >= 1; --j) {
    double sum = 0.0;
    for (std::size_t k = j + 1; k <= n; ++k) {
      const auto& Ak = kernels[k - 1].A;
      sum += (Ak[k - j - 1] - Ak[k - j]) * P.P[n - k];
    }
    P.P[n - j] = sum / kernels[j - 1].A[0];
  }
  return P;
}

void PropertyCheck::record(double margin, std::size_t n, std::size_t k) {
  if (margin < worst_margin) {
    worst_margin = margin;
    worst_n = n;
    worst_k = k;
  }
  if (!(margin > 0.0)) {
    ++violations;
    ok = false;
  }
}

KernelPropertyReport check_kernel_properties(std::span<const AlikhanovKernels> kernels,
                                             const TimeMesh& mesh) {
  KernelPropertyReport report;
  report.m1_ok = check_m1(mesh).m1_ok;
  if (kernels.empty()) return report;
  const double alpha = kernels.front().alpha;
  const double theta = kernels.front().theta;
  const double gap_factor = (1.0 - 2.0 * theta) / (1.0 - theta);

  for (const auto& K : kernels) {
    const std::size_t n = K.n;
    const double tau_n = mesh.step(n);
    const double local = omega(2.0 - alpha, tau_n) / tau_n;
    report.upper.record(1.0 - K.A[0] / (24.0 / 11.0 * local), n, n);

    const L1Kernels L = l1_kernels(mesh, alpha, n);
    for (std::size_t k = 1; k <= n; ++k)
      report.lower.record(K.A[n - k] / (4.0 / 11.0 * L.w[n - k]) - 1.0, n, k);
    for (std::size_t k = 1; k + 1 <= n; ++k)
      report.monotone.record((K.A[n - k - 1] - K.A[n - k]) / K.A[n - k - 1], n, k);
    if (n >= 2) report.theta_gap.record((gap_factor * K.A[0] - K.A[1]) / K.A[0], n, n);
  }
  return report;
}

void write_kernels_csv(std::ostream& os, std::span<const AlikhanovKernels> kernels) {
  os << "n,k,a,b,A\n" << std::setprecision(17);
  for (const auto& K : kernels)
    for (std::size_t k = 1; k <= K.n; ++k) {
      const std::size_t j = K.n - k;
      os << K.n << ',' << k << ',' << K.a[j] << ',' << K.b[j] << ',' << K.A[j] << '\n';
    }
}

}  // namespace tfac
