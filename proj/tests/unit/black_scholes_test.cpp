#include <gtest/gtest.h>

#include "rbergomi/black_scholes.hpp"

using namespace rbergomi;

TEST(BlackScholes, ZeroVarianceIsIntrinsic) {
  EXPECT_DOUBLE_EQ(black_scholes_call(1.0, 1.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(black_scholes_call(1.3, 1.0, 0.0), 0.3);
  EXPECT_DOUBLE_EQ(black_scholes_call(0.7, 1.0, 0.0), 0.0);
}

TEST(BlackScholes, ZeroStrikeReturnsSpot) { EXPECT_DOUBLE_EQ(black_scholes_call(1.0, 0.0, 0.25), 1.0); }

TEST(BlackScholes, AtTheMoneyOracle) {
  // lognormal payoff integrated with mpmath to 30 digits
  EXPECT_NEAR(black_scholes_call(1.0, 1.0, 0.235 * 0.235), 0.0935361559557123799, 1e-12);
}

TEST(BlackScholes, ContinuousAsVarianceVanishes) {
  EXPECT_NEAR(black_scholes_call(1.1, 1.0, 1e-14), 0.1, 1e-12);
  EXPECT_NEAR(black_scholes_call(1.0, 1.0, 1e-14), 0.0, 1e-7);
}

TEST(BlackScholes, DomainErrors) {
  EXPECT_THROW(black_scholes_call(0.0, 1.0, 0.1), DomainError);
  EXPECT_THROW(black_scholes_call(-1.0, 1.0, 0.1), DomainError);
  EXPECT_THROW(black_scholes_call(1.0, 1.0, -1e-3), DomainError);
}

TEST(BlackScholes, MonotoneInVarianceAndSpot) {
  for (double k : {0.5, 0.8, 1.0, 1.2, 2.0}) {
    double prev = -1.0;
    for (int i = 0; i <= 200; ++i) {
      const double p = black_scholes_call(1.0, k, 0.01 * i);
      EXPECT_GE(p, prev);
      prev = p;
    }
    prev = -1.0;
    for (int i = 1; i <= 200; ++i) {
      const double p = black_scholes_call(0.01 * i, k, 0.04);
      EXPECT_GE(p, prev);
      prev = p;
    }
  }
}

TEST(BlackScholes, NoArbitrageBounds) {
  for (double k : {0.5, 1.0, 1.5}) {
    for (double v : {0.01, 0.1, 1.0, 10.0}) {
      const double p = black_scholes_call(1.0, k, v);
      EXPECT_GE(p, std::max(1.0 - k, 0.0) - 1e-15);
      EXPECT_LE(p, 1.0);
    }
  }
}
