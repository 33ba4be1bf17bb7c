#include <gtest/gtest.h>

#include <cmath>

#include "rbergomi/gauss_hermite.hpp"

using namespace rbergomi;

namespace {

double normal_moment(int d) {
  if (d % 2) return 0.0;
  double m = 1.0;
  for (int k = d - 1; k > 0; k -= 2) m *= k;
  return m;
}

}  // namespace

TEST(GaussHermite, SingleNode) {
  const auto r = gauss_hermite_rule(1);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_DOUBLE_EQ(r.nodes[0], 0.0);
  EXPECT_DOUBLE_EQ(r.weights[0], 1.0);
}

TEST(GaussHermite, ThreeNodes) {
  const auto r = gauss_hermite_rule(3);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_NEAR(r.nodes[0], -std::sqrt(3.0), 1e-13);
  EXPECT_NEAR(r.nodes[1], 0.0, 1e-13);
  EXPECT_NEAR(r.nodes[2], std::sqrt(3.0), 1e-13);
  EXPECT_NEAR(r.weights[0], 1.0 / 6.0, 1e-13);
  EXPECT_NEAR(r.weights[1], 2.0 / 3.0, 1e-13);
  EXPECT_NEAR(r.weights[2], 1.0 / 6.0, 1e-13);
}

TEST(GaussHermite, FiveNodesMoments) {
  const auto r = gauss_hermite_rule(5);
  EXPECT_NEAR(r.integrate([](double x) { return std::pow(x, 4); }), 3.0, 1e-11);
  EXPECT_NEAR(r.integrate([](double x) { return std::pow(x, 6); }), 15.0, 1e-10);
}

TEST(GaussHermite, ExactnessUpToDegree2nMinus1) {
  for (std::size_t n = 1; n <= 20; ++n) {
    const auto r = gauss_hermite_rule(n);
    for (int d = 0; d <= static_cast<int>(2 * n - 1); ++d) {
      const double exact = normal_moment(d);
      const double q = r.integrate([d](double x) { return std::pow(x, d); });
      EXPECT_NEAR(q, exact, 1e-9 * std::max(1.0, exact)) << "n=" << n << " d=" << d;
    }
  }
}

TEST(GaussHermite, Invariants) {
  for (std::size_t n : {1, 2, 5, 9, 17, 33, 65}) {
    const auto r = gauss_hermite_rule(n);
    double wsum = 0.0;
    for (double w : r.weights) {
      EXPECT_GT(w, 0.0);
      wsum += w;
    }
    EXPECT_NEAR(wsum, 1.0, 1e-12) << n;
    for (std::size_t i = 0; i < n; ++i) {
      if (i + 1 < n) EXPECT_LT(r.nodes[i], r.nodes[i + 1]);
      EXPECT_NEAR(r.nodes[i], -r.nodes[n - 1 - i], 1e-12);
    }
  }
}

TEST(GaussHermite, RejectsZeroNodes) { EXPECT_THROW(gauss_hermite_rule(0), DomainError); }
