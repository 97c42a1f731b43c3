#include "tfac/periodic_grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "tfac/time_mesh.hpp"

namespace tfac {

Field::Field(std::size_t m, double length, double fill)
    : m_(m), length_(length), values_(m * m, fill) {
  if (m < 4) throw InvalidParameter("field: M must be at least 4");
  if (!(length > 0.0)) throw InvalidParameter("field: domain length must be positive");
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Field laplacian(const Field& f, double eps2) {
  const std::size_t m = f.m();
  const double scale = eps2 / (f.spacing() * f.spacing());
  Field out(m, f.length());
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t ip = (i + 1) % m, im = (i + m - 1) % m;
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t jp = (j + 1) % m, jm = (j + m - 1) % m;
      out(i, j) = scale * (f(ip, j) + f(im, j) + f(i, jp) + f(i, jm) - 4.0 * f(i, j));
    }
  }
  return out;
}

double laplacian_eigenvalue(std::size_t m, double h, std::size_t k, std::size_t l) {
  const double sk = std::sin(M_PI * static_cast<double>(k) / static_cast<double>(m));
  const double sl = std::sin(M_PI * static_cast<double>(l) / static_cast<double>(m));
  return -4.0 / (h * h) * (sk * sk + sl * sl);
}

namespace {
// FFTW's planner is not thread safe.
std::mutex& planner_mutex() {
  static std::mutex mutex;
  return mutex;
}
}  // namespace

struct SpectralSolver::Plans {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spec);
  }
};

SpectralSolver::SpectralSolver(std::size_t m, double length)
    : m_(m), length_(length), plans_(std::make_unique<Plans>()) {
  if (m < 4) throw InvalidParameter("spectral solver: M must be at least 4");
  const std::size_t half = m / 2 + 1;
  const double h = length / static_cast<double>(m);
  symbol_.resize(m * half);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t l = 0; l < half; ++l) symbol_[k * half + l] = -laplacian_eigenvalue(m, h, k, l);

  const int n = static_cast<int>(m);
  std::lock_guard<std::mutex> lock(planner_mutex());
  plans_->real = fftw_alloc_real(m * m);
  plans_->spec = fftw_alloc_complex(m * half);
  // FFTW_ESTIMATE keeps the chosen algorithm, and so the rounding, reproducible.
  plans_->forward = fftw_plan_dft_r2c_2d(n, n, plans_->real, plans_->spec, FFTW_ESTIMATE);
  plans_->backward = fftw_plan_dft_c2r_2d(n, n, plans_->spec, plans_->real, FFTW_ESTIMATE);
  if (!plans_->forward || !plans_->backward)
    throw std::runtime_error("spectral solver: FFTW planning failed");
}

SpectralSolver::~SpectralSolver() = default;

void SpectralSolver::solve(const Field& rhs, double c0, double c1, Field& out) {
  if (!(c0 > 0.0)) throw std::domain_error("helmholtz solve: c0 must be positive");
  if (!(c1 >= 0.0)) throw std::domain_error("helmholtz solve: c1 must be non-negative");
  if (rhs.m() != m_) throw std::invalid_argument("helmholtz solve: grid size mismatch");
  if (!out.same_shape(rhs)) out = Field(rhs.m(), rhs.length());
  const auto& v = rhs.values();
  const bool constant = std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
  if (c1 == 0.0 || constant) {
    // D_h annihilates constants, so no transform is needed (and none of its rounding).
    for (std::size_t k = 0; k < rhs.size(); ++k) out[k] = rhs[k] / c0;
    return;
  }
  const std::size_t half = m_ / 2 + 1;
  std::copy(rhs.values().begin(), rhs.values().end(), plans_->real);
  fftw_execute(plans_->forward);
  const double norm = 1.0 / static_cast<double>(m_ * m_);
  for (std::size_t q = 0; q < m_ * half; ++q) {
    const double f = norm / (c0 + c1 * symbol_[q]);
    plans_->spec[q][0] *= f;
    plans_->spec[q][1] *= f;
  }
  fftw_execute(plans_->backward);
  std::copy(plans_->real, plans_->real + rhs.size(), out.values().begin());
}

Field helmholtz_solve(const Field& rhs, double c0, double c1) {
  SpectralSolver solver(rhs.m(), rhs.length());
  Field out(rhs.m(), rhs.length());
  solver.solve(rhs, c0, c1, out);
  return out;
}

double energy(const Field& f, double epsilon) {
  const std::size_t m = f.m();
  const double h = f.spacing();
  const double e2 = epsilon * epsilon;
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t ip = (i + 1) % m;
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t jp = (j + 1) % m;
      const double u = f(i, j);
      const double dx = (f(ip, j) - u) / h;
      const double dy = (f(i, jp) - u) / h;
      const double w = 1.0 - u * u;
      sum += 0.5 * e2 * (dx * dx + dy * dy) + 0.25 * w * w;
    }
  }
  return h * h * sum;
}

double max_norm(const Field& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double inner(const Field& f, const Field& g) {
  if (!f.same_shape(g)) throw std::invalid_argument("inner: shape mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) sum += f[k] * g[k];
  const double h = f.spacing();
  return h * h * sum;
}

void write_field_binary(const std::string& path, const Field& f, double t) {
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + path);
  for (double v : f.values()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    bin.write(reinterpret_cast<const char*>(bytes), 8);
  }
  nlohmann::json meta = {{"m", f.m()}, {"h", f.spacing()}, {"L", f.length()}, {"t", t}};
  std::ofstream side(path + ".json");
  if (!side) throw std::runtime_error("cannot open " + path + ".json");
  side << std::setprecision(17) << meta.dump(2) << '\n';
}

Field read_field_binary(const std::string& path) {
  std::ifstream side(path + ".json");
  if (!side) throw std::runtime_error("cannot open " + path + ".json");
  const auto meta = nlohmann::json::parse(side);
  Field f(meta.at("m").get<std::size_t>(), meta.at("L").get<double>());
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + path);
  for (auto& v : f.values()) {
    unsigned char bytes[8];
    if (!bin.read(reinterpret_cast<char*>(bytes), 8))
      throw std::runtime_error(path + ": truncated field file");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    v = std::bit_cast<double>(bits);
  }
  return f;
}

void write_field_csv(std::ostream& os, const Field& f) {
  os << "i,j,x,y,u\n" << std::setprecision(17);
  const double h = f.spacing();
  for (std::size_t i = 0; i < f.m(); ++i)
    for (std::size_t j = 0; j < f.m(); ++j)
      os << i << ',' << j << ',' << static_cast<double>(i) * h << ',' << static_cast<double>(j) * h
         << ',' << f(i, j) << '\n';
}

}  // namespace tfac
