// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "dimosr/autodiff.hpp"
#include "dimosr/tensor.hpp"

namespace dimosr {

/// Precomputed 1-D transform of a fixed length. Power-of-two lengths use an
/// iterative radix-2 butterfly; other lengths use Bluestein's chirp-z
/// reformulation over a power-of-two convolution.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const { return n_; }

  /// Unnormalized forward DFT, X[k] = sum_j x[j] exp(-2 pi i jk / n).
  void forward(std::span<std::complex<double>> data) const;
  /// Unnormalized inverse (positive exponent, no 1/n factor).
  void inverse(std::span<std::complex<double>> data) const;

  /// Shared cached plan for length n (thread-safe).
  static std::shared_ptr<const FftPlan> get(std::size_t n);

 private:
  void radix2(std::span<std::complex<double>> data, bool inverse) const;
  void bluestein(std::span<std::complex<double>> data, bool inverse) const;

  std::size_t n_;
  bool pow2_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> twiddles_;  // exp(-2 pi i k / n), k < n/2
  // Bluestein state.
  std::unique_ptr<FftPlan> inner_;
  std::vector<std::complex<double>> chirp_;     // exp(-i pi k^2 / n)
  std::vector<std::complex<double>> kernel_fft_;  // FFT of conj(chirp), wrapped
};

template <typename T>
struct ComplexPlane {
  BasicTensor<T> real;
  BasicTensor<T> imag;
};

/// Per-(n, c) plane unnormalized 2-D DFT of arbitrary size.
template <typename T>
ComplexPlane<T> fft2(const BasicTensor<T>& input);

/// Complex-input 2-D DFT; `inverse` flips the exponent sign (no scaling).
template <typename T>
ComplexPlane<T> fft2(const ComplexPlane<T>& input, bool inverse = false);

/// mean(|Re dF| + |Im dF|) over all bins, channels and batch items, where
/// dF = fft2(sr) - fft2(hr).
template <typename T>
T freq_loss_value(const BasicTensor<T>& sr, const BasicTensor<T>& hr);

template <typename T>
ad::Var<T> freq_loss(const ad::Var<T>& sr, const ad::Var<T>& hr);

/// mean|sr - hr| + lambda * freq_loss(sr, hr). With lambda == 0 the
/// frequency term is not evaluated.
template <typename T>
ad::Var<T> total_loss(const ad::Var<T>& sr, const ad::Var<T>& hr, double lambda);

}  // namespace dimosr
