#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numbers>
#include <span>
#include <thread>
#include <vector>

namespace rbergomi {

inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent seed for a named sub-stream (level, replicate...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed + 0x9e3779b97f4a7c15ULL) ^ mix64(stream * 0xd1b54a32d192ed03ULL + 1));
}

/// Counter-based normal generator: the draws for sample `index` are a pure
/// function of (seed, index), so any partition of the sample range across
/// workers reproduces the same numbers. SplitMix64 stream + Box-Muller.
class CounterNormalStream {
 public:
  CounterNormalStream(std::uint64_t seed, std::uint64_t index) noexcept
      : state_(derive_seed(seed, index)) {}

  /// Uniform in the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  void fill_normals(std::span<double> out) noexcept {
    std::size_t i = 0;
    for (; i + 1 < out.size(); i += 2) {
      const double r = std::sqrt(-2.0 * std::log(uniform()));
      const double theta = 2.0 * std::numbers::pi * uniform();
      out[i] = r * std::cos(theta);
      out[i + 1] = r * std::sin(theta);
    }
    if (i < out.size()) {
      const double r = std::sqrt(-2.0 * std::log(uniform()));
      out[i] = r * std::cos(2.0 * std::numbers::pi * uniform());
    }
  }

 private:
  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    return mix64(z);
  }

  std::uint64_t state_;
};

/// Streaming mean / variance (Welford) with Chan's pairwise merge.
struct RunningStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const RunningStats& o) noexcept {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(count + o.count);
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.count) / n;
    m2 += o.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(o.count) / n;
    count += o.count;
  }

  double variance() const noexcept {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
  double stddev() const noexcept { return std::sqrt(variance()); }
};

/// Worker count used by the estimators; 0 means hardware concurrency.
inline std::atomic<unsigned>& worker_threads() {
  static std::atomic<unsigned> threads{0};
  return threads;
}

inline unsigned resolved_worker_threads() {
  const unsigned t = worker_threads().load();
  if (t != 0) return t;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(chunk) for chunk in [0, chunk_count) on the worker pool. The
/// first exception thrown by any chunk is rethrown on the caller's thread.
template <typename Body>
void parallel_chunks(std::size_t chunk_count, Body&& body) {
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(resolved_worker_threads(), chunk_count));
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunk_count; ++c) body(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunk_count) return;
      try {
        body(c);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(chunk_count);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

/// Statistics of f over indices [0, count), reduced in fixed chunk order so
/// the result does not depend on the worker count. `make_state` builds the
/// per-chunk scratch passed to f(index, state).
template <typename MakeState, typename F>
RunningStats reduce_stats(std::uint64_t count, MakeState&& make_state, F&& f,
                          std::uint64_t chunk = 4096) {
  const std::size_t chunks = static_cast<std::size_t>((count + chunk - 1) / chunk);
  std::vector<RunningStats> partial(chunks);
  parallel_chunks(chunks, [&](std::size_t c) {
    auto state = make_state();
    const std::uint64_t begin = c * chunk;
    const std::uint64_t end = std::min(count, begin + chunk);
    RunningStats s;
    for (std::uint64_t i = begin; i < end; ++i) s.add(f(i, state));
    partial[c] = s;
  });
  RunningStats total;
  for (const auto& s : partial) total.merge(s);
  return total;
}

}  // namespace rbergomi
