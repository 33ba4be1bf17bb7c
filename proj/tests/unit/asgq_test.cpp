#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "rbergomi/asgq.hpp"

using namespace rbergomi;

namespace {

using Fn = std::function<double(std::span<const double>)>;

FunctionIntegrand<Fn> make(Fn f, std::size_t dim) { return FunctionIntegrand<Fn>(std::move(f), dim); }

// all beta <= box, componentwise
void for_each_in_box(const MultiIndex& box, const std::function<void(const MultiIndex&)>& body) {
  MultiIndex b(box.size(), 1);
  for (;;) {
    body(b);
    std::size_t i = 0;
    while (i < b.size() && b[i] == box[i]) b[i++] = 1;
    if (i == b.size()) return;
    ++b[i];
  }
}

}  // namespace

TEST(LevelToNodes, Hierarchies) {
  const LevelToNodes lin{Hierarchy::kLinear}, geo{Hierarchy::kGeometric};
  EXPECT_EQ(lin(1), 1u);
  EXPECT_EQ(lin(2), 5u);
  EXPECT_EQ(lin(3), 9u);
  EXPECT_EQ(geo(1), 1u);
  EXPECT_EQ(geo(2), 3u);
  EXPECT_EQ(geo(3), 5u);
  EXPECT_EQ(geo(4), 9u);
  EXPECT_EQ(geo(6), 33u);
  EXPECT_THROW(lin(0), DomainError);
}

TEST(TensorQuadrature, ExactOnProductPolynomials) {
  // E[x^2 y^4 (1 + z)] = 1 * 3 * 1
  auto f = make([](std::span<const double> x) { return x[0] * x[0] * std::pow(x[1], 4) * (1.0 + x[2]); }, 3);
  const LevelToNodes geo{Hierarchy::kGeometric};
  EXPECT_NEAR(tensor_quadrature(f, {2, 3, 2}, geo), 3.0, 1e-12);
  EXPECT_NEAR(tensor_quadrature(f, {2, 2, 1}, geo), 3.0, 1e-12);
}

TEST(DeltaOperator, TelescopesOnBoxes) {
  const SmoothedIntegrand rb(ModelParams{}, 2, Scheme::kHybrid, true);  // 2N = 4
  auto poly = make([](std::span<const double> x) {
    return std::exp(0.3 * x[0] - 0.2 * x[1]) * (1.0 + x[2] * x[3] * x[3]) + std::sin(x[1] + x[3]);
  }, 4);
  for (Hierarchy h : {Hierarchy::kLinear, Hierarchy::kGeometric}) {
    const LevelToNodes m{h};
    for (const MultiIndex& box : {MultiIndex{2, 2, 2, 2}, MultiIndex{3, 1, 2, 2}, MultiIndex{1, 3, 1, 3},
                                  MultiIndex{3, 2, 1, 1}}) {
      TensorCache c1, c2;
      double s_rb = 0.0, s_poly = 0.0;
      for_each_in_box(box, [&](const MultiIndex& b) {
        s_rb += delta_operator(rb, b, m, c1);
        s_poly += delta_operator(poly, b, m, c2);
      });
      EXPECT_NEAR(s_rb, tensor_quadrature(rb, box, m), 1e-12);
      EXPECT_NEAR(s_poly, tensor_quadrature(poly, box, m), 1e-12);
    }
  }
}

TEST(DeltaOperator, WorkCountsOnlyNewEvaluations) {
  auto f = make([](std::span<const double> x) { return x[0] + x[1]; }, 2);
  const LevelToNodes geo{Hierarchy::kGeometric};
  TensorCache cache;
  std::uint64_t evals = 0;
  delta_operator(f, {1, 1}, geo, cache, &evals);
  EXPECT_EQ(evals, 1u);
  delta_operator(f, {2, 1}, geo, cache, &evals);
  EXPECT_EQ(evals, 1u + 3u);
  delta_operator(f, {2, 2}, geo, cache, &evals);  // needs (1,2) and (2,2)
  EXPECT_EQ(evals, 1u + 3u + 3u + 9u);
  delta_operator(f, {2, 2}, geo, cache, &evals);
  EXPECT_EQ(evals, 16u);
}

TEST(AdaptiveConstruct, SmoothExponentialConverges) {
  const std::vector<double> a{0.6, 0.3, 0.15, 0.05};
  double var = 0.0;
  for (double x : a) var += x * x;
  auto f = make([&](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * x[i];
    return std::exp(s);
  }, a.size());
  for (Hierarchy h : {Hierarchy::kLinear, Hierarchy::kGeometric}) {
    AsgqOptions o;
    o.hierarchy = h;
    o.tolerance = 1e-8;
    const auto st = adaptive_construct(f, o);
    EXPECT_TRUE(st.converged);
    EXPECT_FALSE(st.budget_exhausted);
    EXPECT_TRUE(st.is_downward_closed());
    EXPECT_NEAR(st.estimate, std::exp(0.5 * var), 1e-7);
    // first dimension carries the most variance, so it is refined furthest
    int deepest0 = 0, deepest3 = 0;
    for (const auto& b : st.accepted) {
      deepest0 = std::max(deepest0, b[0]);
      deepest3 = std::max(deepest3, b[3]);
    }
    EXPECT_GE(deepest0, deepest3);
  }
}

TEST(AdaptiveConstruct, EstimateIsSumOfAcceptedDeltas) {
  const SmoothedIntegrand f(ModelParams{}, 2, Scheme::kHybrid, true);
  AsgqOptions o;
  o.tolerance = 1e-3;
  const auto st = adaptive_construct(f, o);
  const LevelToNodes m{o.hierarchy};
  TensorCache cache;
  double s = 0.0;
  for (const auto& b : st.accepted) s += delta_operator(f, b, m, cache);
  EXPECT_NEAR(st.estimate, s, 1e-12);
  EXPECT_TRUE(st.is_downward_closed());
  double margin = 0.0, mx = 0.0;
  for (const auto& [b, e] : st.frontier) {
    margin += std::abs(e.delta);
    mx = std::max(mx, std::abs(e.delta));
    EXPECT_EQ(st.accepted_set.count(b), 0u);
  }
  EXPECT_NEAR(st.error_estimate, margin, 1e-15);
  EXPECT_EQ(st.max_frontier_error, mx);
  EXPECT_LE(st.error_estimate, 1e-3 * std::abs(st.estimate));
}

TEST(AdaptiveConstruct, AbsoluteMaxRule) {
  auto f = make([](std::span<const double> x) { return std::exp(0.5 * x[0]) + std::cos(x[1]); }, 2);
  AsgqOptions o;
  o.stop = AsgqStop::kAbsoluteMax;
  o.tolerance = 1e-6;
  const auto st = adaptive_construct(f, o);
  EXPECT_TRUE(st.converged);
  EXPECT_LE(st.max_frontier_error, 1e-6);
  EXPECT_NEAR(st.estimate, std::exp(0.125) + std::exp(-0.5), 1e-5);
}

TEST(AdaptiveConstruct, BudgetExhaustion) {
  auto f = make([](std::span<const double> x) { return std::abs(x[0]) + std::abs(x[1]) + std::abs(x[2]); }, 3);
  AsgqOptions o;
  o.tolerance = 1e-14;
  o.max_work = 2000;
  const auto st = adaptive_construct(f, o);
  EXPECT_TRUE(st.budget_exhausted);
  EXPECT_FALSE(st.converged);
  EXPECT_GE(st.evaluations, 2000u);
  EXPECT_TRUE(st.is_downward_closed());
}

TEST(AdaptiveConstruct, RejectsNonPositiveTolerance) {
  auto f = make([](std::span<const double>) { return 1.0; }, 1);
  AsgqOptions o;
  o.tolerance = 0.0;
  EXPECT_THROW(adaptive_construct(f, o), ConfigError);
}

TEST(AdaptiveConstruct, ConstantNeedsOnePoint) {
  auto f = make([](std::span<const double>) { return 2.5; }, 6);
  const auto st = adaptive_construct(f, AsgqOptions{});
  EXPECT_DOUBLE_EQ(st.estimate, 2.5);
  EXPECT_EQ(st.accepted.size(), 1u);
  EXPECT_TRUE(st.converged);
}

TEST(AsgqPrice, RichardsonCombinationAndToleranceSplit) {
  const ModelParams p;
  AsgqOptions o;
  o.tolerance = 5e-2;
  const auto e = asgq_price(p, 2, o, {Scheme::kHybrid, true, 1});
  ASSERT_EQ(e.levels.size(), 2u);
  EXPECT_DOUBLE_EQ(e.value, 2.0 * e.levels[1].value - e.levels[0].value);
  EXPECT_DOUBLE_EQ(e.stat_error, 2.0 * e.levels[1].stat_error + e.levels[0].stat_error);
  for (const auto& l : e.levels) EXPECT_LE(l.stat_error, 5e-2 / 3.0 * std::abs(l.value));
  EXPECT_TRUE(e.converged);
}

TEST(AsgqPrice, Deterministic) {
  const ModelParams p;
  const auto a = asgq_price(p, 4, {Hierarchy::kGeometric, 1e-2}, {Scheme::kHybrid, true, 0});
  const auto b = asgq_price(p, 4, {Hierarchy::kGeometric, 1e-2}, {Scheme::kHybrid, true, 0});
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.work.evaluations, b.work.evaluations);
}
