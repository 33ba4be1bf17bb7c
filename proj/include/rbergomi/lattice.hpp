#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rbergomi/errors.hpp"
#include "rbergomi/sampling.hpp"

#ifndef RBERGOMI_DATA_DIR
#define RBERGOMI_DATA_DIR "data"
#endif

namespace rbergomi {

/// Reads a generating-vector file: first line the number of components,
/// then one integer per line.
inline std::vector<std::uint64_t> load_generating_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("lattice_file", "cannot open " + path);
  std::size_t dim = 0;
  if (!(in >> dim) || dim == 0) throw ConfigError("lattice_file", "missing dimension header in " + path);
  std::vector<std::uint64_t> z(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    if (!(in >> z[j])) {
      throw ConfigError("lattice_file", path + ": expected " + std::to_string(dim) + " entries, got " +
                                            std::to_string(j));
    }
  }
  return z;
}

/// Generating vector of the bundled base-2 embedded lattice sequence
/// (valid for n up to 2^20). RBERGOMI_LATTICE_FILE overrides the location.
inline const std::vector<std::uint64_t>& default_generating_vector() {
  static const std::vector<std::uint64_t> z = [] {
    if (const char* env = std::getenv("RBERGOMI_LATTICE_FILE")) return load_generating_vector(env);
    return load_generating_vector(std::string(RBERGOMI_DATA_DIR) + "/lattice_b2_m20.txt");
  }();
  return z;
}

/// Randomly shifted rank-1 lattice rule with n = 2^m points in d dimensions.
class LatticeRule {
 public:
  LatticeRule(std::vector<std::uint64_t> generating_vector, std::uint64_t point_count,
              std::vector<std::vector<double>> shifts)
      : z_(std::move(generating_vector)), n_(point_count), shifts_(std::move(shifts)) {
    if (z_.empty()) throw DomainError("LatticeRule: empty generating vector");
    if (n_ == 0 || !std::has_single_bit(n_)) throw DomainError("LatticeRule: n must be a power of two");
    for (auto& zj : z_) {
      if (zj == 0 || zj >= n_ || std::gcd(zj, n_) != 1) {
        throw DomainError("LatticeRule: generating vector entry " + std::to_string(zj) +
                          " not coprime to n = " + std::to_string(n_));
      }
    }
    for (const auto& s : shifts_) {
      if (s.size() != z_.size()) throw DomainError("LatticeRule: shift dimension mismatch");
      for (double x : s) {
        if (!(x >= 0.0 && x < 1.0)) throw DomainError("LatticeRule: shifts must lie in [0, 1)");
      }
    }
  }

  /// First `dimension` components of an embedded base-2 sequence vector,
  /// reduced mod n, with `shift_count` uniform shifts drawn from `seed`.
  static LatticeRule from_sequence(std::span<const std::uint64_t> sequence, std::size_t dimension,
                                   std::uint64_t point_count, std::size_t shift_count,
                                   std::uint64_t seed) {
    if (dimension > sequence.size()) {
      throw ConfigError("dimension", "exceeds generating vector length " + std::to_string(sequence.size()));
    }
    if (shift_count < 2) throw ConfigError("shifts", "need at least two shift replicates");
    if (point_count == 0 || !std::has_single_bit(point_count)) {
      throw ConfigError("points", "lattice size must be a power of two");
    }
    if (point_count == 1) throw ConfigError("points", "lattice size must be >= 2");
    std::vector<std::uint64_t> z(dimension);
    for (std::size_t j = 0; j < dimension; ++j) z[j] = sequence[j] % point_count;
    std::vector<std::vector<double>> shifts(shift_count, std::vector<double>(dimension));
    for (std::size_t i = 0; i < shift_count; ++i) {
      CounterNormalStream rng(seed, i);
      for (double& x : shifts[i]) x = rng.uniform();
    }
    return LatticeRule(std::move(z), point_count, std::move(shifts));
  }

  std::size_t dimension() const noexcept { return z_.size(); }
  std::uint64_t point_count() const noexcept { return n_; }
  std::size_t shift_count() const noexcept { return shifts_.size(); }
  const std::vector<std::uint64_t>& generating_vector() const noexcept { return z_; }
  const std::vector<double>& shift(std::size_t i) const { return shifts_.at(i); }

  /// Point k of replicate `shift_index` (shift_index < 0 means unshifted).
  void point(std::uint64_t k, std::ptrdiff_t shift_index, std::span<double> out) const {
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (std::size_t j = 0; j < z_.size(); ++j) {
      double x = static_cast<double>((k * z_[j]) % n_) * inv_n;
      if (shift_index >= 0) {
        x += shifts_[static_cast<std::size_t>(shift_index)][j];
        if (x >= 1.0) x -= 1.0;
      }
      out[j] = x;
    }
  }

 private:
  std::vector<std::uint64_t> z_;
  std::uint64_t n_;
  std::vector<std::vector<double>> shifts_;
};

/// All n points of one replicate (intended for small rules).
inline std::vector<std::vector<double>> lattice_points(const LatticeRule& rule,
                                                       std::ptrdiff_t shift_index) {
  std::vector<std::vector<double>> pts(rule.point_count(), std::vector<double>(rule.dimension()));
  for (std::uint64_t k = 0; k < rule.point_count(); ++k) rule.point(k, shift_index, pts[k]);
  return pts;
}

}  // namespace rbergomi
