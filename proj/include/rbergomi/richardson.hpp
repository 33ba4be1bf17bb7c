#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rbergomi/errors.hpp"

namespace rbergomi {

/// Level estimates I(J, 0) on grids dt_0 * 2^-J, coarsest first.
struct RichardsonTableau {
  std::vector<double> levels;
  int depth = 1;
};

/// Applies I(J, k) = (2^k I(J, k-1) - I(J-1, k-1)) / (2^k - 1) and returns
/// I(J_max, depth), built from the finest depth + 1 levels.
inline double richardson_combine(const RichardsonTableau& tableau) {
  const int depth = tableau.depth;
  if (depth < 0) throw DomainError("richardson_combine: depth must be nonnegative");
  if (tableau.levels.size() < static_cast<std::size_t>(depth) + 1) {
    throw DomainError("richardson_combine: need at least depth + 1 levels");
  }
  std::vector<double> row(tableau.levels.end() - (depth + 1), tableau.levels.end());
  for (int k = 1; k <= depth; ++k) {
    const double p = std::ldexp(1.0, k);
    for (std::size_t j = row.size() - 1; j >= static_cast<std::size_t>(k); --j) {
      row[j] = (p * row[j] - row[j - 1]) / (p - 1.0);
    }
  }
  return row.back();
}

/// Coefficients c_J with richardson_combine = sum_J c_J * levels[J] for
/// depth + 1 levels. Used to propagate level variances.
inline std::vector<double> richardson_weights(int depth) {
  std::vector<double> weights(static_cast<std::size_t>(depth) + 1);
  for (std::size_t j = 0; j < weights.size(); ++j) {
    RichardsonTableau unit{std::vector<double>(weights.size(), 0.0), depth};
    unit.levels[j] = 1.0;
    weights[j] = richardson_combine(unit);
  }
  return weights;
}

}  // namespace rbergomi
