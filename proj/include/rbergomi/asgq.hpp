#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "rbergomi/errors.hpp"
#include "rbergomi/estimators.hpp"
#include "rbergomi/gauss_hermite.hpp"
#include "rbergomi/model.hpp"
#include "rbergomi/payoff.hpp"
#include "rbergomi/richardson.hpp"
#include "rbergomi/sampling.hpp"

namespace rbergomi {

/// Per-dimension quadrature levels, 1-based (level 1 is the single node at 0).
using MultiIndex = std::vector<int>;

enum class Hierarchy { kLinear, kGeometric };

inline const char* to_string(Hierarchy h) { return h == Hierarchy::kLinear ? "linear" : "geometric"; }

/// Level-to-nodes map: linear m(b) = 4(b-1)+1, geometric m(1) = 1 and
/// m(b) = 2^(b-1)+1 for b >= 2.
struct LevelToNodes {
  Hierarchy kind = Hierarchy::kGeometric;

  std::size_t operator()(int level) const {
    if (level < 1) throw DomainError("LevelToNodes: level must be >= 1");
    if (level == 1) return 1;
    if (kind == Hierarchy::kLinear) return 4 * static_cast<std::size_t>(level - 1) + 1;
    if (level > 30) throw DomainError("LevelToNodes: geometric level too large");
    return (std::size_t{1} << static_cast<unsigned>(level - 1)) + 1;
  }

  const QuadratureRule1D& rule(int level) const { return cached_gauss_hermite_rule((*this)(level)); }
};

/// Adapts a plain callable double(span<const double>) to the integrand
/// interface used by the estimators (dimension / workspace / call).
template <typename F>
class FunctionIntegrand {
 public:
  FunctionIntegrand(F f, std::size_t dim) : f_(std::move(f)), dim_(dim) {}
  std::size_t dimension() const noexcept { return dim_; }
  IntegrandWorkspace make_workspace() const { return {}; }
  double operator()(std::span<const double> z, IntegrandWorkspace&) const { return f_(z); }

 private:
  F f_;
  std::size_t dim_;
};

/// Number of integrand evaluations of the full tensor rule at `beta`.
inline std::uint64_t tensor_work(const MultiIndex& beta, const LevelToNodes& m) {
  std::uint64_t w = 1;
  for (int b : beta) w *= m(b);
  return w;
}

/// Full tensor-product Gauss-Hermite rule with m(beta_i) nodes in dimension
/// i. Dimensions at level 1 are pinned to the origin; the remaining ones are
/// enumerated in mixed radix and summed in fixed-size chunks.
template <typename Integrand>
double tensor_quadrature(const Integrand& f, const MultiIndex& beta, const LevelToNodes& m) {
  if (beta.size() != f.dimension()) throw DomainError("tensor_quadrature: index dimension mismatch");
  std::vector<std::size_t> active;
  std::vector<const QuadratureRule1D*> rules;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (m(beta[i]) > 1) {
      active.push_back(i);
      rules.push_back(&m.rule(beta[i]));
    }
  }
  const std::uint64_t total = tensor_work(beta, m);
  constexpr std::uint64_t chunk = 256;
  const std::size_t chunks = static_cast<std::size_t>((total + chunk - 1) / chunk);
  std::vector<double> partial(chunks, 0.0);
  parallel_chunks(chunks, [&](std::size_t c) {
    auto ws = f.make_workspace();
    std::vector<double> y(beta.size(), 0.0);
    const std::uint64_t begin = c * chunk;
    const std::uint64_t end = std::min(total, begin + chunk);
    double sum = 0.0;
    for (std::uint64_t idx = begin; idx < end; ++idx) {
      std::uint64_t rest = idx;
      double weight = 1.0;
      for (std::size_t a = 0; a < active.size(); ++a) {
        const std::size_t count = rules[a]->size();
        const std::size_t node = static_cast<std::size_t>(rest % count);
        rest /= count;
        y[active[a]] = rules[a]->nodes[node];
        weight *= rules[a]->weights[node];
      }
      sum += weight * f(y, ws);
    }
    partial[c] = sum;
  });
  double total_sum = 0.0;
  for (double p : partial) total_sum += p;
  return total_sum;
}

/// Memo of tensor-rule values keyed by multi-index, shared by the
/// difference operators of one adaptive run.
class TensorCache {
 public:
  std::optional<double> find(const MultiIndex& beta) const {
    std::lock_guard lock(mutex_);
    const auto it = values_.find(beta);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  void store(const MultiIndex& beta, double value) {
    std::lock_guard lock(mutex_);
    values_.emplace(beta, value);
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return values_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::map<MultiIndex, double> values_;
};

/// Cached tensor value; `evaluations` is incremented by the work of a miss.
template <typename Integrand>
double cached_tensor(const Integrand& f, const MultiIndex& beta, const LevelToNodes& m,
                     TensorCache& cache, std::uint64_t* evaluations = nullptr) {
  if (auto hit = cache.find(beta)) return *hit;
  const double v = tensor_quadrature(f, beta, m);
  cache.store(beta, v);
  if (evaluations) *evaluations += tensor_work(beta, m);
  return v;
}

/// Mixed first difference: inclusion-exclusion over the corners beta - e_S
/// for S ranging over the dimensions with beta_i > 1.
template <typename Integrand>
double delta_operator(const Integrand& f, const MultiIndex& beta, const LevelToNodes& m,
                      TensorCache& cache, std::uint64_t* evaluations = nullptr) {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (beta[i] < 1) throw DomainError("delta_operator: levels must be >= 1");
    if (beta[i] > 1) active.push_back(i);
  }
  if (active.size() > 20) throw DomainError("delta_operator: too many active dimensions");
  double sum = 0.0;
  MultiIndex corner = beta;
  const std::uint64_t subsets = std::uint64_t{1} << active.size();
  for (std::uint64_t s = 0; s < subsets; ++s) {
    int parity = 0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const bool drop = (s >> a) & 1u;
      corner[active[a]] = beta[active[a]] - (drop ? 1 : 0);
      parity ^= drop ? 1 : 0;
    }
    const double q = cached_tensor(f, corner, m, cache, evaluations);
    sum += parity ? -q : q;
  }
  return sum;
}

struct FrontierEntry {
  double delta = 0.0;        // Delta Q_beta; its magnitude is the error contribution
  std::uint64_t work = 0;    // new (uncached) evaluations spent on this difference
  double profit() const { return std::abs(delta) / static_cast<double>(work); }
};

struct IndexSetState {
  std::vector<MultiIndex> accepted;  // acceptance order, root first
  std::set<MultiIndex> accepted_set;
  std::map<MultiIndex, FrontierEntry> frontier;
  double estimate = 0.0;        // sum of Delta Q over the accepted set
  double error_estimate = 0.0;  // sum of |Delta Q| over the frontier
  double max_frontier_error = 0.0;
  std::uint64_t evaluations = 0;
  bool converged = false;
  bool budget_exhausted = false;

  bool is_downward_closed() const {
    for (const auto& beta : accepted) {
      for (std::size_t i = 0; i < beta.size(); ++i) {
        if (beta[i] > 1) {
          MultiIndex back = beta;
          --back[i];
          if (!accepted_set.count(back)) return false;
        }
      }
    }
    return true;
  }
};

/// kRelativeSum: stop once sum |Delta E| over the frontier <= tol * |Q|.
/// kAbsoluteMax: stop once max |Delta E| over the frontier <= tol.
enum class AsgqStop { kRelativeSum, kAbsoluteMax };

struct AsgqOptions {
  Hierarchy hierarchy = Hierarchy::kGeometric;
  double tolerance = 1e-2;
  AsgqStop stop = AsgqStop::kRelativeSum;
  std::uint64_t max_work = std::uint64_t{1} << 26;
  int max_level = 12;
};

/// Greedy dimension-adaptive construction. Starts from the all-ones index;
/// every admissible forward neighbour of an accepted index has its
/// difference computed and joins the frontier; the frontier entry with the
/// largest profit |Delta E| / Delta W is accepted next (ties go to the
/// lexicographically smallest index). Delta W counts the evaluations the
/// difference actually added to the cache. Stops on the AsgqStop rule or
/// once max_work evaluations are spent.
template <typename Integrand>
IndexSetState adaptive_construct(const Integrand& f, const AsgqOptions& opts) {
  if (!(opts.tolerance > 0.0)) throw ConfigError("tol", "must be positive");
  const std::size_t dims = f.dimension();
  const LevelToNodes m{opts.hierarchy};
  TensorCache cache;
  IndexSetState st;

  auto admissible = [&](const MultiIndex& beta) {
    for (std::size_t j = 0; j < dims; ++j) {
      if (beta[j] > 1) {
        MultiIndex back = beta;
        --back[j];
        if (!st.accepted_set.count(back)) return false;
      }
    }
    return true;
  };

  // Candidates ordered by descending profit, then ascending index.
  std::set<std::pair<double, MultiIndex>> by_profit;
  std::multiset<double> margins;
  long double margin_sum = 0.0L;

  auto accept = [&](const MultiIndex& beta, double delta) {
    st.accepted.push_back(beta);
    st.accepted_set.insert(beta);
    st.estimate += delta;
    for (std::size_t i = 0; i < dims; ++i) {
      MultiIndex next = beta;
      ++next[i];
      if (next[i] > opts.max_level) continue;
      if (st.frontier.count(next) || st.accepted_set.count(next) || !admissible(next)) continue;
      FrontierEntry e;
      const std::uint64_t before = st.evaluations;
      e.delta = delta_operator(f, next, m, cache, &st.evaluations);
      e.work = std::max<std::uint64_t>(1, st.evaluations - before);
      by_profit.emplace(-e.profit(), next);
      margins.insert(std::abs(e.delta));
      margin_sum += std::abs(e.delta);
      st.frontier.emplace(std::move(next), e);
    }
  };

  const MultiIndex root(dims, 1);
  accept(root, delta_operator(f, root, m, cache, &st.evaluations));

  for (;;) {
    st.error_estimate = static_cast<double>(margin_sum);
    st.max_frontier_error = margins.empty() ? 0.0 : *margins.rbegin();
    const bool small = opts.stop == AsgqStop::kAbsoluteMax
                           ? st.max_frontier_error <= opts.tolerance
                           : st.error_estimate <= opts.tolerance * std::abs(st.estimate);
    if (by_profit.empty() || small) {
      st.converged = true;
      break;
    }
    if (st.evaluations >= opts.max_work) {
      st.budget_exhausted = true;
      break;
    }
    const MultiIndex beta = by_profit.begin()->second;
    by_profit.erase(by_profit.begin());
    const auto it = st.frontier.find(beta);
    const double delta = it->second.delta;
    margins.erase(margins.find(std::abs(delta)));
    margin_sum -= std::abs(delta);
    st.frontier.erase(it);
    accept(beta, delta);
  }
  // Re-sum exactly so the reported margin carries no running-sum drift.
  st.error_estimate = 0.0;
  for (const auto& [b, e] : st.frontier) st.error_estimate += std::abs(e.delta);
  return st;
}

/// Sparse-grid price: the smoothed integrand (hybrid scheme, optional
/// Brownian bridge on the W1 coordinates) integrated adaptively on each
/// Richardson level steps * 2^J. The tolerance is shared out as
/// tol / sum |c_J| per level so the weighted margins add up to at most tol;
/// the reported error is that weighted sum of frontier margins.
inline EstimateResult asgq_price(const ModelParams& params, std::size_t steps, const AsgqOptions& asgq,
                                 const EstimatorOptions& opts = {}) {
  params.validate();
  detail::check_richardson_depth(opts.richardson_depth);
  const auto start = std::chrono::steady_clock::now();
  const auto weights = richardson_weights(opts.richardson_depth);
  double weight_norm = 0.0;
  for (double c : weights) weight_norm += std::abs(c);
  AsgqOptions level_opts = asgq;
  level_opts.tolerance = asgq.tolerance / weight_norm;
  EstimateResult out;
  bool converged = true;
  for (int j = 0; j <= opts.richardson_depth; ++j) {
    const std::size_t n = detail::level_steps(steps, j);
    const SmoothedIntegrand f(params, n, opts.scheme, opts.use_bridge);
    const IndexSetState st = adaptive_construct(f, level_opts);
    converged = converged && !st.budget_exhausted;
    LevelEstimate lvl{n, st.estimate, st.error_estimate, st.evaluations};
    out.value += weights[static_cast<std::size_t>(j)] * lvl.value;
    out.stat_error += std::abs(weights[static_cast<std::size_t>(j)]) * lvl.stat_error;
    out.work.samples += st.evaluations;
    out.work.evaluations += st.evaluations;
    out.levels.push_back(lvl);
  }
  out.converged = converged;
  out.wall_seconds = detail::seconds_since(start);
  return out;
}

}  // namespace rbergomi
