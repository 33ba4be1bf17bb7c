#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "rbergomi/errors.hpp"

namespace rbergomi {

/// Output lengths below this use direct summation.
inline constexpr std::size_t kDirectConvolutionCrossover = 32;

/// In-place iterative radix-2 FFT of a fixed power-of-two length.
class FftPlan {
 public:
  explicit FftPlan(std::size_t length) : n_(length), bitrev_(length), twiddle_(length / 2) {
    if (length == 0 || !std::has_single_bit(length)) {
      throw DomainError("FftPlan: length must be a power of two");
    }
    const unsigned bits = static_cast<unsigned>(std::countr_zero(length));
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t r = 0;
      for (unsigned b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
      bitrev_[i] = r;
    }
    for (std::size_t k = 0; k < n_ / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_);
      twiddle_[k] = {std::cos(angle), std::sin(angle)};
    }
  }

  std::size_t size() const noexcept { return n_; }

  void forward(std::span<std::complex<double>> x) const { transform(x, false); }

  /// Unnormalised inverse; divide by size() afterwards.
  void inverse(std::span<std::complex<double>> x) const { transform(x, true); }

 private:
  void transform(std::span<std::complex<double>> x, bool inverse) const {
    for (std::size_t i = 0; i < n_; ++i) {
      if (i < bitrev_[i]) std::swap(x[i], x[bitrev_[i]]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          std::complex<double> w = twiddle_[k * stride];
          if (inverse) w = std::conj(w);
          const std::complex<double> t = w * x[start + k + half];
          x[start + k + half] = x[start + k] - t;
          x[start + k] += t;
        }
      }
    }
  }

  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> twiddle_;
};

/// Full linear convolution by direct O(len(a) * len(b)) summation.
inline std::vector<double> convolve_direct(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("convolve_direct: empty input");
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

/// Full linear convolution through a zero-padded FFT of length
/// bit_ceil(len(a) + len(b) - 1).
inline std::vector<double> convolve_fft(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("convolve_fft: empty input");
  const std::size_t out_len = a.size() + b.size() - 1;
  const FftPlan plan(std::bit_ceil(out_len));
  std::vector<std::complex<double>> fa(plan.size()), fb(plan.size());
  for (std::size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
  for (std::size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
  plan.forward(fa);
  plan.forward(fb);
  for (std::size_t i = 0; i < plan.size(); ++i) fa[i] *= fb[i];
  plan.inverse(fa);
  const double scale = 1.0 / static_cast<double>(plan.size());
  std::vector<double> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = fa[i].real() * scale;
  return out;
}

inline std::vector<double> discrete_convolution(std::span<const double> a,
                                                std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("discrete_convolution: empty input");
  if (a.size() + b.size() - 1 < kDirectConvolutionCrossover) return convolve_direct(a, b);
  return convolve_fft(a, b);
}

/// Repeated causal convolution against a fixed kernel: out[i] = sum_{m<=i}
/// kernel[m] * signal[i - m] for i < signal length. The kernel spectrum is
/// computed once; apply() is const and only touches caller-owned scratch.
class CausalConvolver {
 public:
  explicit CausalConvolver(std::vector<double> kernel)
      : kernel_(std::move(kernel)),
        use_fft_(2 * kernel_.size() >= kDirectConvolutionCrossover + 1),
        plan_(use_fft_ ? std::bit_ceil(2 * kernel_.size()) : 1) {
    if (kernel_.empty()) throw DomainError("CausalConvolver: empty kernel");
    if (use_fft_) {
      spectrum_.assign(plan_.size(), 0.0);
      for (std::size_t i = 0; i < kernel_.size(); ++i) spectrum_[i] = kernel_[i];
      plan_.forward(spectrum_);
    }
  }

  std::size_t length() const noexcept { return kernel_.size(); }
  bool uses_fft() const noexcept { return use_fft_; }

  /// Scratch buffer sized for apply().
  std::vector<std::complex<double>> make_scratch() const {
    return std::vector<std::complex<double>>(use_fft_ ? plan_.size() : 0);
  }

  void apply(std::span<const double> signal, std::span<double> out,
             std::span<std::complex<double>> scratch) const {
    const std::size_t n = kernel_.size();
    if (signal.size() != n || out.size() != n) {
      throw DomainError("CausalConvolver::apply: length mismatch");
    }
    if (!use_fft_) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t m = 0; m <= i; ++m) acc += kernel_[m] * signal[i - m];
        out[i] = acc;
      }
      return;
    }
    for (std::size_t i = 0; i < n; ++i) scratch[i] = signal[i];
    for (std::size_t i = n; i < plan_.size(); ++i) scratch[i] = 0.0;
    plan_.forward(scratch);
    for (std::size_t i = 0; i < plan_.size(); ++i) scratch[i] *= spectrum_[i];
    plan_.inverse(scratch);
    const double scale = 1.0 / static_cast<double>(plan_.size());
    for (std::size_t i = 0; i < n; ++i) out[i] = scratch[i].real() * scale;
  }

 private:
  std::vector<double> kernel_;
  bool use_fft_;
  FftPlan plan_;
  std::vector<std::complex<double>> spectrum_;
};

}  // namespace rbergomi
