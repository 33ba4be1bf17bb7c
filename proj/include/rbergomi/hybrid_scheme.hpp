#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "rbergomi/convolution.hpp"
#include "rbergomi/errors.hpp"
#include "rbergomi/model.hpp"

namespace rbergomi {

/// Volterra kernel sqrt(2H) * lag^(H - 1/2).
inline double kernel_eval(double hurst, double lag) {
  if (!(lag > 0.0)) throw DomainError("kernel_eval: lag must be positive");
  if (!(hurst > 0.0 && hurst < 0.5)) throw DomainError("kernel_eval: hurst must lie in (0, 1/2)");
  return std::sqrt(2.0 * hurst) * std::pow(lag, hurst - 0.5);
}

/// Optimal evaluation points b_k, k = 2..N, of the step-function part of the
/// hybrid scheme: b_k^(H-1/2) is the mean of x^(H-1/2) over [k-1, k].
/// Element 0 of the result is b_2.
inline std::vector<double> hybrid_weights(double hurst, std::size_t step_count) {
  if (step_count < 2) throw DomainError("hybrid_weights: need at least two steps");
  if (!(hurst > 0.0 && hurst < 0.5)) throw DomainError("hybrid_weights: hurst must lie in (0, 1/2)");
  const double a = hurst + 0.5;
  std::vector<double> b;
  b.reserve(step_count - 1);
  for (std::size_t k = 2; k <= step_count; ++k) {
    const double kd = static_cast<double>(k);
    b.push_back(std::pow((std::pow(kd, a) - std::pow(kd - 1.0, a)) / a, 1.0 / (hurst - 0.5)));
  }
  return b;
}

using Matrix2 = std::array<std::array<double, 2>, 2>;

/// Covariance of (dW1, W2) over one step of length dt, where
/// W2 = int_0^dt (dt - s)^(H - 1/2) dW1_s.
inline Matrix2 hybrid_step_covariance(double hurst, double dt) {
  if (!(dt > 0.0)) throw DomainError("hybrid_step_covariance: dt must be positive");
  const double cross = std::pow(dt, hurst + 0.5) / (hurst + 0.5);
  return {{{dt, cross}, {cross, std::pow(dt, 2.0 * hurst) / (2.0 * hurst)}}};
}

/// Hybrid scheme (kappa = 1) on a fixed grid of N steps over [0, T].
///
/// Holds the per-step 2x2 Cholesky factor and the convolution kernel
/// g_m = (b_{m+1} dt)^(H - 1/2), m >= 1 (g_0 = 0), so that
///   fbm_i = sqrt(2H) * (W2_i + sum_{m=1}^{i-1} g_m dW1_{i-m}).
class HybridScheme {
 public:
  HybridScheme(double hurst, double maturity, std::size_t steps)
      : hurst_(hurst),
        dt_(maturity / static_cast<double>(steps)),
        steps_(steps),
        convolver_(make_kernel(hurst, maturity, steps)) {
    if (steps == 0) throw DomainError("HybridScheme: need at least one step");
    const Matrix2 cov = hybrid_step_covariance(hurst, dt_);
    l11_ = std::sqrt(cov[0][0]);
    l21_ = cov[1][0] / l11_;
    const double pivot = cov[1][1] - l21_ * l21_;
    if (!(pivot > 0.0)) throw NumericalFailure("HybridScheme: step covariance not positive definite");
    l22_ = std::sqrt(pivot);
  }

  std::size_t steps() const noexcept { return steps_; }
  double dt() const noexcept { return dt_; }
  double hurst() const noexcept { return hurst_; }
  const CausalConvolver& convolver() const noexcept { return convolver_; }

  /// Lower Cholesky entries of hybrid_step_covariance.
  std::array<double, 3> step_factor() const noexcept { return {l11_, l21_, l22_}; }

  /// dW1 = l11 z1, W2 = l21 z1 + l22 z2, elementwise.
  void colorize(std::span<const double> z1, std::span<const double> z2, std::span<double> dw1,
                std::span<double> w2) const {
    for (std::size_t i = 0; i < steps_; ++i) {
      dw1[i] = l11_ * z1[i];
      w2[i] = l21_ * z1[i] + l22_ * z2[i];
    }
  }

  /// Same as colorize() when the increments are already available (e.g. from
  /// a Brownian bridge): W2 is correlated with dW1 / sqrt(dt).
  void correlate_w2(std::span<const double> dw1, std::span<const double> z2,
                    std::span<double> w2) const {
    const double c = l21_ / l11_;
    for (std::size_t i = 0; i < steps_; ++i) w2[i] = c * dw1[i] + l22_ * z2[i];
  }

  /// Evaluates the scheme; `conv` and `scratch` are caller-owned buffers
  /// (conv of length N, scratch from convolver().make_scratch()).
  void simulate(std::span<const double> dw1, std::span<const double> w2, std::span<double> fbm,
                std::span<double> conv, std::span<std::complex<double>> scratch) const {
    convolver_.apply(dw1, conv, scratch);
    const double scale = std::sqrt(2.0 * hurst_);
    for (std::size_t i = 0; i < steps_; ++i) fbm[i] = scale * (w2[i] + conv[i]);
  }

 private:
  static std::vector<double> make_kernel(double hurst, double maturity, std::size_t steps) {
    if (steps == 0) throw DomainError("HybridScheme: need at least one step");
    if (!(maturity > 0.0)) throw DomainError("HybridScheme: maturity must be positive");
    const double dt = maturity / static_cast<double>(steps);
    std::vector<double> kernel(steps, 0.0);
    if (steps >= 2) {
      const auto b = hybrid_weights(hurst, steps);
      for (std::size_t m = 1; m < steps; ++m) kernel[m] = std::pow(b[m - 1] * dt, hurst - 0.5);
    }
    return kernel;
  }

  double hurst_;
  double dt_;
  std::size_t steps_;
  CausalConvolver convolver_;
  double l11_ = 0.0;
  double l21_ = 0.0;
  double l22_ = 0.0;
};

/// Applies the per-step Cholesky factor of hybrid_step_covariance to iid
/// normals, producing correlated (dW1, W2) pairs.
inline GaussianInput colorize_hybrid_input(double hurst, double dt, const GaussianInput& raw) {
  if (raw.w1.size() != raw.w2.size()) throw DomainError("colorize_hybrid_input: length mismatch");
  const Matrix2 cov = hybrid_step_covariance(hurst, dt);
  const double l11 = std::sqrt(cov[0][0]);
  const double l21 = cov[1][0] / l11;
  const double l22 = std::sqrt(cov[1][1] - l21 * l21);
  GaussianInput out{std::vector<double>(raw.w1.size()), std::vector<double>(raw.w1.size())};
  for (std::size_t i = 0; i < raw.w1.size(); ++i) {
    out.w1[i] = l11 * raw.w1[i];
    out.w2[i] = l21 * raw.w1[i] + l22 * raw.w2[i];
  }
  return out;
}

/// Hybrid-scheme path from correlated (dW1, W2) pairs.
inline FbmPath simulate_fbm_hybrid(const ModelParams& params, const GaussianInput& input) {
  const std::size_t n = input.w1.size();
  if (n == 0 || input.w2.size() != n) throw DomainError("simulate_fbm_hybrid: length mismatch");
  const HybridScheme scheme(params.hurst, params.maturity, n);
  FbmPath path{std::vector<double>(n)};
  std::vector<double> conv(n);
  auto scratch = scheme.convolver().make_scratch();
  scheme.simulate(input.w1, input.w2, path.values, conv, scratch);
  return path;
}

}  // namespace rbergomi
