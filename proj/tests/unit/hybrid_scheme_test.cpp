#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "rbergomi/hybrid_scheme.hpp"
#include "rbergomi/sampling.hpp"

using namespace rbergomi;

namespace {

// Eq. for the hybrid path written as a plain double loop, kappa = 1.
std::vector<double> hybrid_direct(double h, double t, const GaussianInput& in) {
  const std::size_t n = in.w1.size();
  const double dt = t / static_cast<double>(n);
  std::vector<double> out(n);
  for (std::size_t i = 1; i <= n; ++i) {
    double s = in.w2[i - 1];
    for (std::size_t k = 2; k <= i; ++k) {
      const double kd = static_cast<double>(k);
      const double a = h + 0.5;
      const double bk = std::pow((std::pow(kd, a) - std::pow(kd - 1.0, a)) / a, 1.0 / (h - 0.5));
      s += std::pow(bk * dt, h - 0.5) * in.w1[i - k];
    }
    out[i - 1] = std::sqrt(2.0 * h) * s;
  }
  return out;
}

GaussianInput random_input(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<double> nd;
  GaussianInput g{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    g.w1[i] = nd(gen);
    g.w2[i] = nd(gen);
  }
  return g;
}

}  // namespace

TEST(Kernel, UnitLag) { EXPECT_NEAR(kernel_eval(0.25, 1.0), std::sqrt(0.5), 1e-15); }

TEST(Kernel, QuarterLag) {
  const double expected = std::sqrt(0.14) * std::exp(-0.43 * std::log(0.25));
  EXPECT_NEAR(kernel_eval(0.07, 0.25), expected, 1e-14);
}

TEST(Kernel, DecreasingInLagAndRejectsZero) {
  double prev = INFINITY;
  for (int i = 1; i <= 100; ++i) {
    const double k = kernel_eval(0.07, 0.05 * i);
    EXPECT_LT(k, prev);
    prev = k;
  }
  EXPECT_THROW(kernel_eval(0.07, 0.0), DomainError);
  EXPECT_THROW(kernel_eval(0.07, -1.0), DomainError);
}

TEST(HybridWeights, SecondPoint) {
  // mpmath
  EXPECT_NEAR(hybrid_weights(0.07, 2)[0], 1.45912634601275425874, 1e-13);
}

TEST(HybridWeights, SecondPointMinimisesKernelError) {
  // b^(H-1/2) equal to the interval mean of x^(H-1/2) is the L2-optimal constant
  const double h = 0.07;
  const double mean = (std::pow(2.0, h + 0.5) - 1.0) / (h + 0.5);
  const double b2 = hybrid_weights(h, 2)[0];
  EXPECT_NEAR(std::pow(b2, h - 0.5), mean, 1e-14);
}

TEST(HybridWeights, AsymptoticRatio) {
  const auto b = hybrid_weights(0.07, 10000);
  EXPECT_NEAR(b.back() / 10000.0, 1.0, 1e-3);
}

TEST(HybridWeights, InsideEachIntervalAndIncreasing) {
  for (double h : {0.02, 0.07, 0.3}) {
    const auto b = hybrid_weights(h, 64);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double k = static_cast<double>(i + 2);
      EXPECT_GT(b[i], k - 1.0);
      EXPECT_LT(b[i], k);
      if (i > 0) EXPECT_GT(b[i], b[i - 1]);
    }
  }
}

TEST(HybridStepCovariance, UnitStep) {
  const auto c = hybrid_step_covariance(0.07, 1.0);
  EXPECT_NEAR(c[0][0], 1.0, 1e-15);
  EXPECT_NEAR(c[0][1], 1.0 / 0.57, 1e-14);
  EXPECT_NEAR(c[1][0], 1.0 / 0.57, 1e-14);
  EXPECT_NEAR(c[1][1], 1.0 / 0.14, 1e-13);
}

TEST(HybridStepCovariance, MatchesNumericalIntegrals) {
  boost::math::quadrature::tanh_sinh<double> ts;
  for (double h : {0.02, 0.07, 0.3}) {
    for (double dt : {1.0, 0.125, 1.0 / 64}) {
      const auto c = hybrid_step_covariance(h, dt);
      // u = dt - s keeps the singular endpoint at the origin
      const double cross = ts.integrate([&](double u) { return std::pow(u, h - 0.5); }, 0.0, dt);
      const double var = ts.integrate([&](double u) { return std::pow(u, 2.0 * h - 1.0); }, 0.0, dt);
      EXPECT_NEAR(c[0][1], cross, 1e-8 * std::max(1.0, cross));
      EXPECT_NEAR(c[1][1], var, 1e-8 * std::max(1.0, var));
      EXPECT_NEAR(c[1][1] * 2.0 * h, std::pow(dt, 2.0 * h), 1e-14);
      EXPECT_LT(c[0][1] * c[0][1], c[0][0] * c[1][1]);
    }
  }
}

TEST(Colorize, ZeroAndDeterminant) {
  const GaussianInput zero{std::vector<double>(4, 0.0), std::vector<double>(4, 0.0)};
  const auto out = colorize_hybrid_input(0.07, 0.25, zero);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(out.w1[i], 0.0);
    EXPECT_EQ(out.w2[i], 0.0);
  }
  const HybridScheme s(0.07, 1.0, 4);
  const auto [l11, l21, l22] = s.step_factor();
  (void)l21;
  const auto c = hybrid_step_covariance(0.07, 0.25);
  EXPECT_NEAR(l11 * l22, std::sqrt(c[0][0] * c[1][1] - c[0][1] * c[1][0]), 1e-14);
}

TEST(Colorize, EmpiricalCovariance) {
  const double h = 0.07, dt = 1.0 / 16;
  const auto target = hybrid_step_covariance(h, dt);
  const std::size_t m = 1000000;
  GaussianInput raw{std::vector<double>(m), std::vector<double>(m)};
  std::vector<double> z(2);
  for (std::size_t i = 0; i < m; ++i) {
    CounterNormalStream rng(99, i);
    rng.fill_normals(z);
    raw.w1[i] = z[0];
    raw.w2[i] = z[1];
  }
  const auto out = colorize_hybrid_input(h, dt, raw);
  const std::vector<double>* comp[2] = {&out.w1, &out.w2};
  for (int a = 0; a < 2; ++a) {
    for (int b = a; b < 2; ++b) {
      RunningStats st;
      for (std::size_t i = 0; i < m; ++i) st.add((*comp[a])[i] * (*comp[b])[i]);
      const double se = st.stddev() / std::sqrt(static_cast<double>(m));
      EXPECT_NEAR(st.mean, target[a][b], 3.0 * se) << a << b;
    }
  }
}

TEST(SimulateHybrid, ZeroInputGivesZeroPath) {
  ModelParams p;
  const GaussianInput zero{std::vector<double>(16, 0.0), std::vector<double>(16, 0.0)};
  for (double x : simulate_fbm_hybrid(p, zero).values) EXPECT_EQ(x, 0.0);
}

TEST(SimulateHybrid, SingleStep) {
  ModelParams p;
  const GaussianInput in{{0.3}, {-1.1}};
  EXPECT_NEAR(simulate_fbm_hybrid(p, in).values[0], std::sqrt(2.0 * p.hurst) * -1.1, 1e-15);
}

TEST(SimulateHybrid, MatchesDirectDoubleLoop) {
  std::mt19937_64 gen(5);
  for (double h : {0.02, 0.07, 0.3}) {
    for (std::size_t n : {1, 2, 7, 16, 17, 32, 64}) {
      ModelParams p;
      p.hurst = h;
      p.maturity = 1.5;
      const auto in = random_input(gen, n);
      const auto fast = simulate_fbm_hybrid(p, in).values;
      const auto slow = hybrid_direct(h, p.maturity, in);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(fast[i], slow[i], 1e-10) << "n=" << n << " i=" << i;
    }
  }
}

TEST(SimulateHybrid, LengthMismatch) {
  ModelParams p;
  const GaussianInput in{{0.3, 0.1}, {-1.1}};
  EXPECT_THROW(simulate_fbm_hybrid(p, in), DomainError);
}

TEST(SimulateHybrid, TerminalVariance) {
  ModelParams p;  // H = 0.07, T = 1
  const std::size_t n = 16, m = 1000000;
  const double dt = 1.0 / n;
  RunningStats terminal;
  RunningStats square;
  std::vector<double> z(2 * n);
  for (std::size_t s = 0; s < m; ++s) {
    CounterNormalStream rng(2024, s);
    rng.fill_normals(z);
    const GaussianInput raw{{z.begin(), z.begin() + n}, {z.begin() + n, z.end()}};
    const double x = simulate_fbm_hybrid(p, colorize_hybrid_input(p.hurst, dt, raw)).values.back();
    terminal.add(x);
    square.add(x * x);
  }
  const double se = square.stddev() / std::sqrt(static_cast<double>(m));
  EXPECT_NEAR(square.mean, 1.0, 3.0 * se);
}
