#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rbergomi/cholesky.hpp"
#include "rbergomi/errors.hpp"
#include "rbergomi/model.hpp"

namespace rbergomi {

/// C(x) = 2H int_0^1 (1-s)^-g (x-s)^-g ds with g = 1/2 - H, for x >= 1.
///
/// With t = 1 - s and a = x - 1 the integral is int_0^1 t^-g (a+t)^-g dt.
/// Substituting t = r^p, p = 1/(1-g), removes the t^-g endpoint factor; the
/// remaining (a + r^p)^-g is split at r0 = a^(1-g) so that both pieces stay
/// smooth as a -> 0: [0, r0] is rescaled to [0, 1] and [r0, 1] is mapped
/// through r = e^y. Each piece goes to adaptive Gauss-Kronrod.
inline double correlation_function_C(double hurst, double x) {
  if (!(hurst > 0.0 && hurst < 0.5)) throw DomainError("correlation_function_C: hurst out of range");
  if (!(x >= 1.0) || !std::isfinite(x)) throw DomainError("correlation_function_C: x must be >= 1");
  const double g = 0.5 - hurst;
  const double p = 1.0 / (1.0 - g);
  const double a = x - 1.0;
  if (a == 0.0) return 1.0;

  using boost::math::quadrature::gauss_kronrod;
  constexpr unsigned max_depth = 15;
  constexpr double tol = 1e-11;  // tighter settings stall on roundoff in the error estimate

  const double r0 = std::min(1.0, std::pow(a, 1.0 - g));
  const double inner = r0 * gauss_kronrod<double, 15>::integrate(
                                [&](double rho) { return std::pow(a + std::pow(r0 * rho, p), -g); },
                                0.0, 1.0, max_depth, tol);
  double outer = 0.0;
  if (r0 < 1.0) {
    outer = gauss_kronrod<double, 15>::integrate(
        [&](double y) {
          const double r = std::exp(y);
          return r * std::pow(a + std::pow(r, p), -g);
        },
        std::log(r0), 0.0, max_depth, tol);
  }
  return 2.0 * hurst * p * (inner + outer);
}

/// Joint covariance of (W1_{t_1..t_N}, Wtilde_{t_1..t_N}) on t_i = i T / N,
/// Brownian block first.
inline Matrix exact_covariance_matrix(const ModelParams& params, std::size_t steps) {
  if (steps == 0) throw DomainError("exact_covariance_matrix: need at least one step");
  const std::size_t n = steps;
  const double h = params.hurst;
  const double dt = params.maturity / static_cast<double>(n);
  const double cross_scale = std::sqrt(2.0 * h) / (h + 0.5);
  auto t = [&](std::size_t i) { return static_cast<double>(i + 1) * dt; };

  Matrix cov(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double ti = t(i);
      const double tj = t(j);
      cov(i, j) = std::min(ti, tj);

      const double u = std::min(ti, tj);
      const double v = std::max(ti, tj);
      cov(n + i, n + j) = i == j ? std::pow(u, 2.0 * h)
                                 : std::pow(u, 2.0 * h) * correlation_function_C(h, v / u);

      // Cov(Wtilde_{t_j}, W1_{t_i}).
      const double m = std::min(ti, tj);
      const double c = cross_scale * (std::pow(tj, h + 0.5) - std::pow(tj - m, h + 0.5));
      cov(i, n + j) = c;
      cov(n + j, i) = c;
    }
  }
  return cov;
}

/// Splits L * raw into the Brownian levels W1_{t_i} and the Volterra path.
inline std::pair<std::vector<double>, FbmPath> simulate_fbm_exact(const LowerTriangularFactor& factor,
                                                                  std::span<const double> raw) {
  const std::size_t dim = factor.dimension();
  if (raw.size() != dim || dim % 2 != 0) throw DomainError("simulate_fbm_exact: dimension mismatch");
  std::vector<double> y(dim);
  factor.apply(raw, y);
  const std::size_t n = dim / 2;
  std::vector<double> w1(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
  FbmPath fbm{std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(n), y.end())};
  return {std::move(w1), std::move(fbm)};
}

}  // namespace rbergomi
