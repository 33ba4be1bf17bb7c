#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rbergomi/errors.hpp"
#include "rbergomi/lattice.hpp"
#include "rbergomi/model.hpp"
#include "rbergomi/normal.hpp"
#include "rbergomi/payoff.hpp"
#include "rbergomi/richardson.hpp"
#include "rbergomi/sampling.hpp"

namespace rbergomi {

/// Two-sided 95% normal quantile used for every reported confidence bound.
inline constexpr double kConfidenceFactor = 1.96;

struct WorkCounters {
  std::uint64_t samples = 0;      // MC draws or q * n lattice points, all levels
  std::uint64_t evaluations = 0;  // integrand evaluations, all levels
};

struct LevelEstimate {
  std::size_t steps = 0;
  double value = 0.0;
  double stat_error = 0.0;
  std::uint64_t samples = 0;
};

struct EstimateResult {
  double value = 0.0;
  double stat_error = 0.0;  // 1.96 * sigma / sqrt(replicates), or quadrature estimate for ASGQ
  std::optional<double> bias_est;
  WorkCounters work;
  double wall_seconds = 0.0;
  std::vector<LevelEstimate> levels;
  bool converged = true;  // false when an adaptive run stopped on its work budget
};

struct EstimatorOptions {
  Scheme scheme = Scheme::kHybrid;
  bool use_bridge = false;
  int richardson_depth = 0;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline void check_richardson_depth(int depth) {
  if (depth < 0 || depth > 2) throw ConfigError("richardson", "depth must be 0, 1 or 2");
}

/// Combines independent level estimates through the Richardson weights;
/// level variances add with squared weights.
inline EstimateResult combine_levels(std::vector<LevelEstimate> levels, int depth) {
  EstimateResult out;
  const auto weights = richardson_weights(depth);
  double var = 0.0;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    out.value += weights[j] * levels[j].value;
    var += weights[j] * weights[j] * levels[j].stat_error * levels[j].stat_error;
    out.work.samples += levels[j].samples;
    out.work.evaluations += levels[j].samples;
  }
  out.stat_error = std::sqrt(var);
  out.levels = std::move(levels);
  return out;
}

inline std::size_t level_steps(std::size_t coarse_steps, int level) {
  return coarse_steps << static_cast<unsigned>(level);
}

}  // namespace detail

/// Plain Monte Carlo over an integrand on R^d with counter-based draws.
template <typename Integrand>
LevelEstimate mc_level(const Integrand& f, std::uint64_t samples, std::uint64_t seed) {
  const std::size_t dim = f.dimension();
  struct State {
    IntegrandWorkspace ws;
    std::vector<double> z;
  };
  const RunningStats stats = reduce_stats(
      samples, [&] { return State{f.make_workspace(), std::vector<double>(dim)}; },
      [&](std::uint64_t i, State& st) {
        CounterNormalStream rng(seed, i);
        rng.fill_normals(st.z);
        return f(st.z, st.ws);
      });
  LevelEstimate lvl;
  lvl.value = stats.mean;
  lvl.stat_error = kConfidenceFactor * stats.stddev() / std::sqrt(static_cast<double>(samples));
  lvl.samples = samples;
  return lvl;
}

/// Monte Carlo price of the smoothed integrand. `steps` is the coarsest grid;
/// with Richardson depth d the levels are steps * 2^J, J = 0..d, each with
/// `samples` independent draws.
inline EstimateResult mc_estimate(const ModelParams& params, std::size_t steps, std::uint64_t samples,
                                  std::uint64_t seed, const EstimatorOptions& opts = {}) {
  params.validate();
  if (samples < 2) throw ConfigError("samples", "must be >= 2");
  detail::check_richardson_depth(opts.richardson_depth);
  const auto start = std::chrono::steady_clock::now();
  std::vector<LevelEstimate> levels;
  for (int j = 0; j <= opts.richardson_depth; ++j) {
    const std::size_t n = detail::level_steps(steps, j);
    const SmoothedIntegrand f(params, n, opts.scheme, opts.use_bridge);
    LevelEstimate lvl = mc_level(f, samples, derive_seed(seed, static_cast<std::uint64_t>(j)));
    lvl.steps = n;
    levels.push_back(lvl);
  }
  EstimateResult out = detail::combine_levels(std::move(levels), opts.richardson_depth);
  out.wall_seconds = detail::seconds_since(start);
  return out;
}

/// Unsmoothed two-factor estimator of the same discretised price, used to
/// validate the conditional representation.
inline EstimateResult plain_mc_oracle(const ModelParams& params, std::size_t steps,
                                      std::uint64_t samples, std::uint64_t seed,
                                      Scheme scheme = Scheme::kHybrid) {
  params.validate();
  if (samples < 2) throw ConfigError("samples", "must be >= 2");
  const auto start = std::chrono::steady_clock::now();
  const PlainPayoffIntegrand f(params, steps, scheme);
  LevelEstimate lvl = mc_level(f, samples, seed);
  lvl.steps = steps;
  EstimateResult out = detail::combine_levels({lvl}, 0);
  out.wall_seconds = detail::seconds_since(start);
  return out;
}

/// Randomly shifted lattice estimate of one integrand: value is the mean of
/// the q replicate means, error 1.96 * sd(replicates) / sqrt(q).
template <typename Integrand>
LevelEstimate qmc_level(const Integrand& f, const LatticeRule& rule) {
  const std::size_t dim = f.dimension();
  if (rule.dimension() != dim) throw DomainError("qmc_estimate: lattice dimension mismatch");
  const std::uint64_t n = rule.point_count();
  struct State {
    IntegrandWorkspace ws;
    std::vector<double> u;
    std::vector<double> z;
  };
  RunningStats replicates;
  for (std::size_t s = 0; s < rule.shift_count(); ++s) {
    const RunningStats stats = reduce_stats(
        n, [&] { return State{f.make_workspace(), std::vector<double>(dim), std::vector<double>(dim)}; },
        [&](std::uint64_t k, State& st) {
          rule.point(k, static_cast<std::ptrdiff_t>(s), st.u);
          for (std::size_t j = 0; j < dim; ++j) {
            // A shifted point can only hit 0 exactly on a measure-zero event.
            st.z[j] = inverse_normal_cdf(st.u[j] > 0.0 ? st.u[j] : 0x1.0p-64);
          }
          return f(st.z, st.ws);
        });
    replicates.add(stats.mean);
  }
  LevelEstimate lvl;
  lvl.value = replicates.mean;
  lvl.stat_error = kConfidenceFactor * replicates.stddev() /
                   std::sqrt(static_cast<double>(rule.shift_count()));
  lvl.samples = n * rule.shift_count();
  return lvl;
}

struct LatticeOptions {
  std::uint64_t points = 1024;  // n, power of two
  std::size_t shifts = 8;       // q
};

/// Randomised rank-1 lattice QMC price; one rule of dimension 2 * N_J per
/// Richardson level, shifts drawn independently per level.
inline EstimateResult qmc_estimate(const ModelParams& params, std::size_t steps,
                                   const LatticeOptions& lattice, std::uint64_t seed,
                                   const EstimatorOptions& opts = {},
                                   std::span<const std::uint64_t> generating_vector = {}) {
  params.validate();
  detail::check_richardson_depth(opts.richardson_depth);
  const auto& gv = generating_vector.empty() ? std::span<const std::uint64_t>(default_generating_vector())
                                             : generating_vector;
  const auto start = std::chrono::steady_clock::now();
  std::vector<LevelEstimate> levels;
  for (int j = 0; j <= opts.richardson_depth; ++j) {
    const std::size_t n = detail::level_steps(steps, j);
    const SmoothedIntegrand f(params, n, opts.scheme, opts.use_bridge);
    const auto rule = LatticeRule::from_sequence(gv, f.dimension(), lattice.points, lattice.shifts,
                                                 derive_seed(seed, static_cast<std::uint64_t>(j)));
    LevelEstimate lvl = qmc_level(f, rule);
    lvl.steps = n;
    levels.push_back(lvl);
  }
  EstimateResult out = detail::combine_levels(std::move(levels), opts.richardson_depth);
  out.wall_seconds = detail::seconds_since(start);
  return out;
}

enum class EstimatorKind { kMonteCarlo, kQuasiMonteCarlo };

/// Monte Carlo sample count whose 95% statistical error matches
/// `target_error`: ceil((1.96 * sigma / target)^2).
inline std::uint64_t balance_samples(double target_error, double pilot_stddev) {
  if (!(target_error > 0.0)) throw ConfigError("target", "must be positive");
  if (!(pilot_stddev >= 0.0)) throw ConfigError("pilot", "standard deviation must be nonnegative");
  const double m = std::ceil(std::pow(kConfidenceFactor * pilot_stddev / target_error, 2.0));
  return std::max<std::uint64_t>(2, static_cast<std::uint64_t>(m));
}

/// Lattice size for randomised QMC: doubles n (q fixed) from `start_points`
/// until replicate_error(n) <= target. Returns the chosen n; throws
/// BudgetExhausted when max_points is passed.
inline std::uint64_t balance_lattice_points(double target_error, std::uint64_t start_points,
                                            std::uint64_t max_points,
                                            const std::function<double(std::uint64_t)>& replicate_error) {
  if (!(target_error > 0.0)) throw ConfigError("target", "must be positive");
  for (std::uint64_t n = start_points; n <= max_points; n *= 2) {
    if (replicate_error(n) <= target_error) return n;
  }
  throw BudgetExhausted("balance_lattice_points: target not reached with n <= " +
                        std::to_string(max_points));
}

/// Dispatching form: MC uses the closed-form square law; QMC requires the
/// replicate-error callback.
inline std::uint64_t balance_samples(double target_error, double pilot_stddev, EstimatorKind kind,
                                     const std::function<double(std::uint64_t)>& replicate_error = {},
                                     std::uint64_t start_points = 1024,
                                     std::uint64_t max_points = std::uint64_t{1} << 20) {
  if (kind == EstimatorKind::kMonteCarlo) return balance_samples(target_error, pilot_stddev);
  if (!replicate_error) throw ConfigError("estimator", "QMC balancing needs a replicate-error callback");
  return balance_lattice_points(target_error, start_points, max_points, replicate_error);
}

}  // namespace rbergomi
