#include <gtest/gtest.h>

#include <cmath>

#include "rbergomi/payoff.hpp"
#include "rbergomi/sampling.hpp"

using namespace rbergomi;

TEST(ConditionalPayoff, ZeroInputSetOne) {
  // v_i = xi0 exp(-eta^2/2 t_i^2H), left-point sums, evaluated in mpmath
  ModelParams p;
  const SmoothedIntegrand f(p, 8);
  auto ws = f.make_workspace();
  const std::vector<double> z(16, 0.0);
  EXPECT_NEAR(f(z, ws), 0.0191820451299848145227, 1e-13);
}

TEST(ConditionalPayoff, LeftPointArguments) {
  ModelParams p;
  p.rho = -0.5;
  const std::vector<double> dw1{0.1, -0.2, 0.05};
  const std::vector<double> v{0.04, 0.09, 123.0};  // v_N never used
  const auto a = conditional_payoff_args(p, dw1, v);
  const double dt = 1.0 / 3.0;
  const double stoch = std::sqrt(p.xi0) * 0.1 + 0.2 * -0.2 + 0.3 * 0.05;
  const double integrated = (p.xi0 + 0.04 + 0.09) * dt;
  EXPECT_NEAR(a.effective_spot, std::exp(-0.5 * stoch - 0.125 * integrated), 1e-15);
  EXPECT_NEAR(a.residual_variance, 0.75 * integrated, 1e-15);
  EXPECT_DOUBLE_EQ(a.strike, p.strike);
}

TEST(ConditionalPayoff, ZeroCorrelationKeepsSpot) {
  ModelParams p;
  p.rho = 0.0;
  const std::vector<double> dw1{0.4, -1.0, 2.0, 0.3};
  const std::vector<double> v{0.04, 0.09, 0.2, 0.1};
  EXPECT_DOUBLE_EQ(conditional_payoff_args(p, dw1, v).effective_spot, p.spot);
}

TEST(ConditionalPayoff, DeterministicVarianceWithZeroW1) {
  ModelParams p;
  p.eta = 0.0;
  const std::vector<double> dw1(4, 0.0);
  const std::vector<double> v(4, p.xi0);
  const double expected = black_scholes_call(p.spot * std::exp(-0.5 * p.rho * p.rho * p.xi0), p.strike,
                                             (1.0 - p.rho * p.rho) * p.xi0);
  EXPECT_NEAR(conditional_payoff(p, dw1, v), expected, 1e-15);
}

TEST(ConditionalPayoff, LengthMismatch) {
  ModelParams p;
  EXPECT_THROW(conditional_payoff_args(p, std::vector<double>{0.1}, std::vector<double>{0.1, 0.2}),
               DomainError);
}

TEST(SmoothedIntegrand, FarTailsStayFinite) {
  ModelParams p;
  for (Scheme s : {Scheme::kHybrid, Scheme::kExact}) {
    const SmoothedIntegrand f(p, 4, s);
    auto ws = f.make_workspace();
    for (double x : {-40.0, -9.0, 9.0, 40.0}) {
      const std::vector<double> z(8, x);
      const double y = f(z, ws);
      EXPECT_TRUE(std::isfinite(y));
      EXPECT_GE(y, 0.0);
    }
  }
}

TEST(SmoothedIntegrand, SmoothAlongALine) {
  // second differences shrink like h^2 (a kink would give h)
  ModelParams p;
  const SmoothedIntegrand f(p, 8, Scheme::kHybrid, true);
  auto ws = f.make_workspace();
  std::vector<double> z(16), dir(16);
  CounterNormalStream(3, 0).fill_normals(dir);
  auto max_second_difference = [&](double h) {
    double worst = 0.0;
    for (double s = -2.0; s <= 2.0; s += 0.01) {
      double y[3];
      for (int k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < 16; ++i) z[i] = (s + (k - 1) * h) * dir[i];
        y[k] = f(z, ws);
      }
      worst = std::max(worst, std::abs(y[2] - 2.0 * y[1] + y[0]));
    }
    return worst;
  };
  const double ratio = max_second_difference(2e-3) / max_second_difference(1e-3);
  EXPECT_NEAR(ratio, 4.0, 0.5);
}

TEST(SmoothedIntegrand, BridgeRejectedWithExactScheme) {
  ModelParams p;
  EXPECT_THROW(SmoothedIntegrand(p, 4, Scheme::kExact, true), ConfigError);
}

TEST(SmoothedIntegrand, BridgeNeedsPowerOfTwo) {
  ModelParams p;
  EXPECT_THROW(SmoothedIntegrand(p, 6, Scheme::kHybrid, true), DomainError);
}
