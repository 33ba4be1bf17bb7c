#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rbergomi/black_scholes.hpp"
#include "rbergomi/brownian_bridge.hpp"
#include "rbergomi/cholesky.hpp"
#include "rbergomi/errors.hpp"
#include "rbergomi/exact_scheme.hpp"
#include "rbergomi/hybrid_scheme.hpp"
#include "rbergomi/model.hpp"

namespace rbergomi {

/// v_i = xi0 * exp(eta * W_i - eta^2 / 2 * t_i^(2H)) at t_i = i T / N.
inline std::vector<double> variance_path(const ModelParams& params, const FbmPath& fbm) {
  const std::size_t n = fbm.values.size();
  const double dt = params.maturity / static_cast<double>(n);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + 1) * dt;
    v[i] = params.xi0 * std::exp(params.eta * fbm.values[i] -
                                 0.5 * params.eta * params.eta * std::pow(t, 2.0 * params.hurst));
    if (!std::isfinite(v[i])) throw NumericalFailure("variance_path: non-finite variance");
  }
  return v;
}

/// Left-point discretisation of the conditioning integrals:
///   int sqrt(v) dW1 ~ sum sqrt(v_{i-1}) dW1_i,  int v dt ~ sum v_{i-1} dt,
/// with v_0 = xi0. `dw1` holds the N Brownian increments, `v` holds v_1..v_N
/// (v_N is not needed by the left-point rule).
inline ConditionalPayoffArgs conditional_payoff_args(const ModelParams& params,
                                                     std::span<const double> dw1,
                                                     std::span<const double> v) {
  const std::size_t n = dw1.size();
  if (v.size() != n || n == 0) throw DomainError("conditional_payoff: path length mismatch");
  const double dt = params.maturity / static_cast<double>(n);
  double stoch = std::sqrt(params.xi0) * dw1[0];
  double integrated = params.xi0;
  for (std::size_t i = 1; i < n; ++i) {
    stoch += std::sqrt(v[i - 1]) * dw1[i];
    integrated += v[i - 1];
  }
  integrated *= dt;
  const double rho = params.rho;
  const double spot = params.spot * std::exp(rho * stoch - 0.5 * rho * rho * integrated);
  return {spot, params.strike, (1.0 - rho * rho) * integrated};
}

inline double conditional_payoff(const ModelParams& params, std::span<const double> dw1,
                                 std::span<const double> v) {
  const auto args = conditional_payoff_args(params, dw1, v);
  return black_scholes_call(args.effective_spot, args.strike, args.residual_variance);
}

/// Per-thread buffers for SmoothedIntegrand.
struct IntegrandWorkspace {
  std::vector<double> dw1, w2, fbm, conv, v, path, joint;
  std::vector<std::complex<double>> scratch;
};

/// The conditionally smoothed price integrand on R^{2N}: maps 2N iid
/// standard normals to C_BS(G(w)). Immutable after construction and safe to
/// share across threads; all mutable state lives in IntegrandWorkspace.
///
/// Hybrid scheme layout: coordinates [0, N) drive W1 (through the Brownian
/// bridge when enabled, else as a random walk) and [N, 2N) drive W2.
/// Exact scheme: all 2N coordinates are multiplied by the Cholesky factor of
/// the joint covariance; the bridge does not apply.
class SmoothedIntegrand {
 public:
  SmoothedIntegrand(ModelParams params, std::size_t steps, Scheme scheme = Scheme::kHybrid,
                    bool use_bridge = false)
      : params_(params), steps_(steps), scheme_(scheme), use_bridge_(use_bridge) {
    params_.validate();
    if (steps == 0) throw ConfigError("steps", "must be >= 1");
    if (scheme == Scheme::kHybrid) {
      hybrid_ = std::make_shared<const HybridScheme>(params.hurst, params.maturity, steps);
      if (use_bridge) bridge_ = std::make_shared<const BridgeSchedule>(steps);
    } else {
      if (use_bridge) throw ConfigError("bridge", "not supported with the exact scheme");
      factor_ = std::make_shared<const LowerTriangularFactor>(
          cholesky_factor(exact_covariance_matrix(params, steps)));
    }
    grid_power_.resize(steps);
    const double dt = params.maturity / static_cast<double>(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      grid_power_[i] = std::pow(static_cast<double>(i + 1) * dt, 2.0 * params.hurst);
    }
  }

  std::size_t dimension() const noexcept { return 2 * steps_; }
  std::size_t steps() const noexcept { return steps_; }
  const ModelParams& params() const noexcept { return params_; }
  Scheme scheme() const noexcept { return scheme_; }
  bool uses_bridge() const noexcept { return use_bridge_; }

  IntegrandWorkspace make_workspace() const {
    IntegrandWorkspace ws;
    ws.dw1.resize(steps_);
    ws.w2.resize(steps_);
    ws.fbm.resize(steps_);
    ws.conv.resize(steps_);
    ws.v.resize(steps_);
    ws.path.resize(steps_ + 1);
    if (hybrid_) ws.scratch = hybrid_->convolver().make_scratch();
    if (factor_) ws.joint.resize(2 * steps_);
    return ws;
  }

  /// Fills ws.dw1 and ws.fbm from the Gaussian coordinates.
  void simulate(std::span<const double> z, IntegrandWorkspace& ws) const {
    if (z.size() != 2 * steps_) throw DomainError("SmoothedIntegrand: dimension mismatch");
    const auto z1 = z.first(steps_);
    const auto z2 = z.subspan(steps_);
    if (hybrid_) {
      if (bridge_) {
        bridge_->transform(z1, params_.maturity, ws.dw1, ws.path);
        hybrid_->correlate_w2(ws.dw1, z2, ws.w2);
      } else {
        hybrid_->colorize(z1, z2, ws.dw1, ws.w2);
      }
      hybrid_->simulate(ws.dw1, ws.w2, ws.fbm, ws.conv, ws.scratch);
    } else {
      factor_->apply(z, ws.joint);
      double prev = 0.0;
      for (std::size_t i = 0; i < steps_; ++i) {
        ws.dw1[i] = ws.joint[i] - prev;
        prev = ws.joint[i];
        ws.fbm[i] = ws.joint[steps_ + i];
      }
    }
  }

  /// Variance at the grid points from ws.fbm into ws.v.
  void fill_variance(IntegrandWorkspace& ws) const {
    const double half_eta2 = 0.5 * params_.eta * params_.eta;
    for (std::size_t i = 0; i < steps_; ++i) {
      ws.v[i] = params_.xi0 * std::exp(params_.eta * ws.fbm[i] - half_eta2 * grid_power_[i]);
    }
  }

  double operator()(std::span<const double> z, IntegrandWorkspace& ws) const {
    simulate(z, ws);
    fill_variance(ws);
    const auto args = conditional_payoff_args(params_, ws.dw1, ws.v);
    // Far-tail quadrature nodes can overflow the variance or underflow the
    // effective spot; both have a finite limit for the call price.
    if (std::isinf(args.residual_variance)) {
      return params_.rho == 0.0 ? args.effective_spot : 0.0;
    }
    if (args.effective_spot == 0.0) return 0.0;
    if (!std::isfinite(args.effective_spot) || !std::isfinite(args.residual_variance)) {
      throw NumericalFailure("SmoothedIntegrand: non-finite path functional");
    }
    return black_scholes_call(args.effective_spot, args.strike, args.residual_variance);
  }

 private:
  ModelParams params_;
  std::size_t steps_;
  Scheme scheme_;
  bool use_bridge_;
  std::shared_ptr<const HybridScheme> hybrid_;
  std::shared_ptr<const BridgeSchedule> bridge_;
  std::shared_ptr<const LowerTriangularFactor> factor_;
  std::vector<double> grid_power_;
};

/// Unsmoothed payoff (S_T - K)^+ on R^{3N}: the third block of N normals
/// drives the orthogonal Brownian motion W_perp, and
///   log S_T = log S0 + sum sqrt(v_{i-1}) (rho dW1_i + sqrt(1-rho^2) dWperp_i)
///             - 1/2 sum v_{i-1} dt.
class PlainPayoffIntegrand {
 public:
  PlainPayoffIntegrand(ModelParams params, std::size_t steps, Scheme scheme = Scheme::kHybrid)
      : inner_(params, steps, scheme, false) {}

  std::size_t dimension() const noexcept { return 3 * inner_.steps(); }
  IntegrandWorkspace make_workspace() const { return inner_.make_workspace(); }

  double operator()(std::span<const double> z, IntegrandWorkspace& ws) const {
    const std::size_t n = inner_.steps();
    if (z.size() != 3 * n) throw DomainError("PlainPayoffIntegrand: dimension mismatch");
    inner_.simulate(z.first(2 * n), ws);
    inner_.fill_variance(ws);
    const auto& p = inner_.params();
    const auto perp = z.subspan(2 * n);
    const double dt = p.maturity / static_cast<double>(n);
    const double sqrt_dt = std::sqrt(dt);
    const double rho_bar = std::sqrt(1.0 - p.rho * p.rho);
    double log_s = std::log(p.spot);
    double v_prev = p.xi0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dz = p.rho * ws.dw1[i] + rho_bar * sqrt_dt * perp[i];
      log_s += std::sqrt(v_prev) * dz - 0.5 * v_prev * dt;
      v_prev = ws.v[i];
    }
    return std::max(std::exp(log_s) - p.strike, 0.0);
  }

 private:
  SmoothedIntegrand inner_;
};

}  // namespace rbergomi
