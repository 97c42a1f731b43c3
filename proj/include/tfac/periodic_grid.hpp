#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace tfac {

/// Periodic grid function on [0, L)^2 with M points per direction. Value
/// (i, j) sits at (x_0 + i h, y_0 + j h) and is stored at index i*M + j.
class Field {
 public:
  Field() = default;
  Field(std::size_t m, double length, double fill = 0.0);

  std::size_t m() const { return m_; }
  std::size_t size() const { return values_.size(); }
  double length() const { return length_; }
  double spacing() const { return length_ / static_cast<double>(m_); }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * m_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * m_ + j]; }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool same_shape(const Field& other) const {
    return m_ == other.m_ && length_ == other.length_;
  }
  bool all_finite() const;

 private:
  std::size_t m_ = 0;
  double length_ = 1.0;
  std::vector<double> values_;
};

/// eps2 * D_h f with the periodic five-point stencil.
Field laplacian(const Field& f, double eps2 = 1.0);

/// Eigenvalue of D_h for Fourier mode (k, l).
double laplacian_eigenvalue(std::size_t m, double h, std::size_t k, std::size_t l);

/// Solves (c0 I - c1 D_h) u = rhs by diagonalizing D_h with a real FFT.
/// Plans are created once per instance; execute() calls are reentrant only
/// across distinct instances.
class SpectralSolver {
 public:
  SpectralSolver(std::size_t m, double length);
  ~SpectralSolver();
  SpectralSolver(const SpectralSolver&) = delete;
  SpectralSolver& operator=(const SpectralSolver&) = delete;

  std::size_t m() const { return m_; }

  /// Throws std::domain_error when c0 <= 0 or c1 < 0.
  void solve(const Field& rhs, double c0, double c1, Field& out);

 private:
  struct Plans;
  std::size_t m_;
  double length_;
  std::vector<double> symbol_;  // -D_h eigenvalues on the half spectrum
  std::unique_ptr<Plans> plans_;
};

/// One-shot convenience wrapper around SpectralSolver.
Field helmholtz_solve(const Field& rhs, double c0, double c1);

/// h^2 sum [ eps^2/2 (|dx f|^2 + |dy f|^2) + (1 - f^2)^2 / 4 ] with forward
/// periodic differences.
double energy(const Field& f, double epsilon);

double max_norm(const Field& f);
/// h^2-weighted inner product.
double inner(const Field& f, const Field& g);

/// Raw little-endian doubles, row-major, plus `<path>.json` with {m, h, L, t}.
void write_field_binary(const std::string& path, const Field& f, double t);
Field read_field_binary(const std::string& path);
/// CSV `i,j,x,y,u` with x = i h, y = j h relative to the grid origin.
void write_field_csv(std::ostream& os, const Field& f);

}  // namespace tfac
