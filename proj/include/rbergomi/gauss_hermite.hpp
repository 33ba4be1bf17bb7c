#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <vector>

#include "rbergomi/errors.hpp"

namespace rbergomi {

/// One-dimensional rule against the standard normal density: weights sum to
/// one, nodes ascending and symmetric about zero.
struct QuadratureRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }

  /// Sums mirrored node pairs together, so odd integrands cancel exactly.
  template <typename F>
  double integrate(F&& f) const {
    const std::size_t n = nodes.size();
    double sum = n % 2 ? weights[n / 2] * f(nodes[n / 2]) : 0.0;
    for (std::size_t i = 0; i < n / 2; ++i) {
      sum += weights[i] * (f(nodes[i]) + f(nodes[n - 1 - i]));
    }
    return sum;
  }
};

namespace detail {

// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with Wilkinson
// shifts. `diag` is overwritten with the eigenvalues, `off[i]` couples rows i
// and i+1 and is destroyed.
inline void tridiagonal_eigenvalues(std::vector<double>& diag, std::vector<double> off) {
  const int n = static_cast<int>(diag.size());
  off.resize(static_cast<std::size_t>(n), 0.0);
  off[static_cast<std::size_t>(n - 1)] = 0.0;
  auto d = [&](int i) -> double& { return diag[static_cast<std::size_t>(i)]; };
  auto e = [&](int i) -> double& { return off[static_cast<std::size_t>(i)]; };

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d(m)) + std::abs(d(m + 1));
        if (std::abs(e(m)) <= 1e-17 * dd) break;
      }
      if (m != l) {
        if (iter++ == 200) throw NumericalFailure("tridiagonal eigen-solve did not converge");
        double g = (d(l + 1) - d(l)) / (2.0 * e(l));
        double r = std::hypot(g, 1.0);
        g = d(m) - d(l) + e(l) / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e(i);
          const double b = c * e(i);
          r = std::hypot(f, g);
          e(i + 1) = r;
          if (r == 0.0) {
            d(i + 1) -= p;
            e(m) = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d(i + 1) - p;
          r = (d(i) - g) * s + 2.0 * c * b;
          p = s * r;
          d(i + 1) = g + p;
          g = c * r - b;
        }
        if (r == 0.0 && i >= l) continue;
        d(l) -= p;
        e(l) = g;
        e(m) = 0.0;
      }
    } while (m != l);
  }
}

// Orthonormal probabilists' Hermite polynomials p_0..p_{n} at x; returns
// p_n and p_{n-1} and accumulates sum_{k<n} p_k^2.
struct HermiteEval {
  double pn;
  double pn_1;
  double christoffel_sum;
};

inline HermiteEval eval_orthonormal_hermite(std::size_t n, double x) {
  double prev = 0.0;
  double cur = 1.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sum += cur * cur;
    const double next =
        (x * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
  }
  return {cur, prev, sum};
}

}  // namespace detail

/// Gauss-Hermite rule with `node_count` points, probabilists' normalisation.
///
/// Nodes come from the Golub-Welsch eigenproblem of the Jacobi matrix
/// (zero diagonal, off-diagonal sqrt(k)), are polished by Newton iteration
/// on the orthonormal recurrence and symmetrised. Weights are Christoffel
/// numbers 1 / sum_k p_k(x)^2, renormalised to sum exactly to one.
inline QuadratureRule1D gauss_hermite_rule(std::size_t node_count) {
  if (node_count == 0) throw DomainError("gauss_hermite_rule: node_count must be >= 1");
  const std::size_t n = node_count;

  std::vector<double> nodes(n, 0.0);
  std::vector<double> off(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) off[k] = std::sqrt(static_cast<double>(k + 1));
  detail::tridiagonal_eigenvalues(nodes, off);
  std::sort(nodes.begin(), nodes.end());

  for (double& x : nodes) {
    for (int it = 0; it < 4; ++it) {
      const auto h = detail::eval_orthonormal_hermite(n, x);
      const double dp = std::sqrt(static_cast<double>(n)) * h.pn_1;
      if (dp == 0.0) break;
      const double dx = h.pn / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
  }

  for (std::size_t i = 0; i < n / 2; ++i) {
    const double half = 0.5 * (nodes[n - 1 - i] - nodes[i]);
    nodes[i] = -half;
    nodes[n - 1 - i] = half;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;

  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    weights[i] = 1.0 / detail::eval_orthonormal_hermite(n, nodes[i]).christoffel_sum;
  }
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double w = 0.5 * (weights[i] + weights[n - 1 - i]);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;

  return {std::move(nodes), std::move(weights)};
}

/// Process-wide memo of Gauss-Hermite rules; returned references stay valid.
inline const QuadratureRule1D& cached_gauss_hermite_rule(std::size_t node_count) {
  static std::mutex mutex;
  static std::map<std::size_t, QuadratureRule1D> rules;
  std::lock_guard lock(mutex);
  auto it = rules.find(node_count);
  if (it == rules.end()) it = rules.emplace(node_count, gauss_hermite_rule(node_count)).first;
  return it->second;
}

}  // namespace rbergomi
