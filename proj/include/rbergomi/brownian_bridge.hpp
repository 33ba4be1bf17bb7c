#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rbergomi/errors.hpp"

namespace rbergomi {

/// Hierarchical construction order of a Brownian path on N = 2^m equal steps.
///
/// Coordinate 0 fixes the terminal value; the following coordinates fill in
/// dyadic midpoints level by level (coarsest first, left to right). Grid
/// points are numbered 0..N with B_0 = 0.
class BridgeSchedule {
 public:
  struct Step {
    std::size_t target;
    std::size_t left;
    std::size_t right;
    double left_weight;
    double right_weight;
    double sd_factor;  // sqrt(w (1 - w) (right - left)); multiply by sqrt(dt)
  };

  explicit BridgeSchedule(std::size_t grid_size) : n_(grid_size) {
    if (grid_size == 0 || !std::has_single_bit(grid_size)) {
      throw DomainError("BridgeSchedule: grid size must be a power of two");
    }
    steps_.reserve(n_);
    steps_.push_back({n_, 0, n_, 0.0, 0.0, std::sqrt(static_cast<double>(n_))});
    for (std::size_t span = n_; span >= 2; span /= 2) {
      const std::size_t half = span / 2;
      for (std::size_t left = 0; left < n_; left += span) {
        const std::size_t right = left + span;
        const double w = static_cast<double>(half) / static_cast<double>(span);
        steps_.push_back({left + half, left, right, 1.0 - w, w,
                          std::sqrt(w * (1.0 - w) * static_cast<double>(span))});
      }
    }
  }

  std::size_t grid_size() const noexcept { return n_; }
  const std::vector<Step>& steps() const noexcept { return steps_; }

  /// level_order()[k] is the grid point (1..N) determined by coordinate k.
  std::vector<std::size_t> level_order() const {
    std::vector<std::size_t> order;
    order.reserve(n_);
    for (const auto& s : steps_) order.push_back(s.target);
    return order;
  }

  /// Maps N iid standard normals to the N Brownian increments over
  /// [0, horizon]. `path` is scratch of length N + 1.
  void transform(std::span<const double> z, double horizon, std::span<double> increments,
                 std::span<double> path) const {
    if (z.size() != n_ || increments.size() != n_ || path.size() != n_ + 1) {
      throw DomainError("BridgeSchedule::transform: length mismatch");
    }
    const double sqrt_dt = std::sqrt(horizon / static_cast<double>(n_));
    path[0] = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      const Step& s = steps_[k];
      path[s.target] = s.left_weight * path[s.left] + s.right_weight * path[s.right] +
                       s.sd_factor * sqrt_dt * z[k];
    }
    for (std::size_t i = 0; i < n_; ++i) increments[i] = path[i + 1] - path[i];
  }

 private:
  std::size_t n_;
  std::vector<Step> steps_;
};

inline std::vector<double> bridge_transform(const BridgeSchedule& schedule,
                                            std::span<const double> z, double horizon) {
  std::vector<double> increments(schedule.grid_size());
  std::vector<double> path(schedule.grid_size() + 1);
  schedule.transform(z, horizon, increments, path);
  return increments;
}

}  // namespace rbergomi
