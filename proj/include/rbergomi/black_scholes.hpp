#pragma once

#include <algorithm>
#include <cmath>

#include "rbergomi/errors.hpp"
#include "rbergomi/normal.hpp"

namespace rbergomi {

/// Zero-rate Black-Scholes call price parameterised by total variance
/// sigma^2 * T over the life of the option (not an annualised volatility).
inline double black_scholes_call(double spot, double strike, double total_variance) {
  if (!(spot > 0.0) || !std::isfinite(spot)) {
    throw DomainError("black_scholes_call: spot must be positive and finite");
  }
  if (!(total_variance >= 0.0) || !std::isfinite(total_variance)) {
    throw DomainError("black_scholes_call: total variance must be nonnegative and finite");
  }
  if (strike <= 0.0) return spot - strike;
  if (total_variance == 0.0) return std::max(spot - strike, 0.0);

  const double sd = std::sqrt(total_variance);
  const double d1 = (std::log(spot / strike) + 0.5 * total_variance) / sd;
  const double d2 = d1 - sd;
  const double price = spot * normal_cdf(d1) - strike * normal_cdf(d2);
  return std::max(price, std::max(spot - strike, 0.0));
}

}  // namespace rbergomi
