#pragma once

#include <cmath>
#include <vector>

#include "rbergomi/errors.hpp"

namespace rbergomi {

/// rough Bergomi model with a flat forward variance curve, plus the call
/// contract being priced.
struct ModelParams {
  double hurst = 0.07;
  double eta = 1.9;
  double rho = -0.9;
  double xi0 = 0.235 * 0.235;
  double spot = 1.0;
  double strike = 1.0;
  double maturity = 1.0;

  /// Throws ConfigError naming the first violated field.
  void validate() const {
    if (!(hurst > 0.0 && hurst < 0.5)) throw ConfigError("hurst", "must lie in (0, 1/2)");
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("eta", "must be nonnegative");
    if (!(rho > -1.0 && rho <= 0.0)) throw ConfigError("rho", "must lie in (-1, 0]");
    if (!(xi0 > 0.0) || !std::isfinite(xi0)) throw ConfigError("xi0", "must be positive");
    if (!(spot > 0.0) || !std::isfinite(spot)) throw ConfigError("spot", "must be positive");
    if (!(strike > 0.0) || !std::isfinite(strike)) throw ConfigError("strike", "must be positive");
    if (!(maturity > 0.0) || !std::isfinite(maturity)) {
      throw ConfigError("maturity", "must be positive");
    }
  }
};

/// Pair of length-N Gaussian vectors feeding one path. Depending on the stage
/// these are raw iid normals or the correlated (dW1, W2) pairs of the hybrid
/// scheme.
struct GaussianInput {
  std::vector<double> w1;
  std::vector<double> w2;

  std::size_t steps() const noexcept { return w1.size(); }
};

/// Approximate Volterra process at t_i = i * T / N, i = 1..N (zero at t = 0
/// is implicit).
struct FbmPath {
  std::vector<double> values;
};

/// Arguments of the Black-Scholes call produced by conditioning on W1.
struct ConditionalPayoffArgs {
  double effective_spot;
  double strike;
  double residual_variance;
};

enum class Scheme { kHybrid, kExact };

inline const char* to_string(Scheme s) { return s == Scheme::kHybrid ? "hybrid" : "exact"; }

}  // namespace rbergomi
