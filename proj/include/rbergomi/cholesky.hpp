#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rbergomi/errors.hpp"

namespace rbergomi {

/// Dense row-major square matrix.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t dimension() const noexcept { return n_; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * n_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * n_ + c]; }
  std::span<const double> data() const noexcept { return data_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Lower-triangular Cholesky factor L with L * L^T equal to the input matrix.
class LowerTriangularFactor {
 public:
  explicit LowerTriangularFactor(Matrix lower) : lower_(std::move(lower)) {}

  std::size_t dimension() const noexcept { return lower_.dimension(); }
  double operator()(std::size_t r, std::size_t c) const noexcept { return lower_(r, c); }
  const Matrix& matrix() const noexcept { return lower_; }

  /// out = L * z.
  void apply(std::span<const double> z, std::span<double> out) const {
    const std::size_t n = dimension();
    if (z.size() != n || out.size() != n) {
      throw DomainError("LowerTriangularFactor::apply: dimension mismatch");
    }
    for (std::size_t r = 0; r < n; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c <= r; ++c) acc += lower_(r, c) * z[c];
      out[r] = acc;
    }
  }

  /// L * L^T.
  Matrix reconstruct() const {
    const std::size_t n = dimension();
    Matrix m(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c <= r; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k <= c; ++k) acc += lower_(r, k) * lower_(c, k);
        m(r, c) = acc;
        m(c, r) = acc;
      }
    }
    return m;
  }

 private:
  Matrix lower_;
};

/// Cholesky-Banachiewicz factorisation. Throws NumericalFailure when the
/// input is not symmetric or a pivot drops below 1e-14.
inline LowerTriangularFactor cholesky_factor(const Matrix& a) {
  const std::size_t n = a.dimension();
  if (n == 0) throw DomainError("cholesky_factor: empty matrix");
  double scale = 0.0;
  for (double v : a.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < r; ++c) {
      if (std::abs(a(r, c) - a(c, r)) > 1e-12 * std::max(1.0, scale)) {
        throw NumericalFailure("cholesky_factor: matrix is not symmetric");
      }
    }
  }

  Matrix l(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = a(i, j);
      for (std::size_t k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
      if (i == j) {
        if (!(sum > 1e-14)) {
          throw NumericalFailure("cholesky_factor: matrix is not positive definite (pivot " +
                                 std::to_string(i) + " = " + std::to_string(sum) + ")");
        }
        l(i, i) = std::sqrt(sum);
      } else {
        l(i, j) = sum / l(j, j);
      }
    }
  }
  return LowerTriangularFactor(std::move(l));
}

}  // namespace rbergomi
