// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "dimosr/signal.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace dimosr {
namespace {

using cd = std::complex<double>;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n), pow2_(is_pow2(n)) {
  if (n == 0) throw ContractError("FftPlan: length must be positive");
  if (pow2_) {
    bitrev_.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
      bitrev_[i] = r;
    }
    twiddles_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddles_[k] = {std::cos(a), std::sin(a)};
    }
    return;
  }
  const std::size_t m = next_pow2(2 * n - 1);
  inner_ = std::make_unique<FftPlan>(m);
  chirp_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle small and exact.
    const std::size_t k2 = (k * k) % (2 * n);
    const double a = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp_[k] = {std::cos(a), std::sin(a)};
  }
  kernel_fft_.assign(m, cd{0.0, 0.0});
  kernel_fft_[0] = std::conj(chirp_[0]);
  for (std::size_t k = 1; k < n; ++k) {
    kernel_fft_[k] = std::conj(chirp_[k]);
    kernel_fft_[m - k] = std::conj(chirp_[k]);
  }
  inner_->forward(kernel_fft_);
}

void FftPlan::forward(std::span<cd> data) const {
  if (data.size() != n_) throw ContractError("FftPlan: buffer length mismatch");
  if (pow2_) {
    radix2(data, false);
  } else {
    bluestein(data, false);
  }
}

void FftPlan::inverse(std::span<cd> data) const {
  if (data.size() != n_) throw ContractError("FftPlan: buffer length mismatch");
  if (pow2_) {
    radix2(data, true);
  } else {
    bluestein(data, true);
  }
}

void FftPlan::radix2(std::span<cd> a, bool inverse) const {
  const std::size_t n = n_;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < bitrev_[i]) std::swap(a[i], a[bitrev_[i]]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const cd w = inverse ? std::conj(twiddles_[j * step]) : twiddles_[j * step];
        const cd u = a[i + j];
        const cd v = a[i + j + half] * w;
        a[i + j] = u + v;
        a[i + j + half] = u - v;
      }
    }
  }
}

void FftPlan::bluestein(std::span<cd> data, bool inverse) const {
  // inverse(x) = conj(forward(conj(x)))
  const std::size_t n = n_;
  const std::size_t m = inner_->size();
  std::vector<cd> buf(m, cd{0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) {
    const cd x = inverse ? std::conj(data[k]) : data[k];
    buf[k] = x * chirp_[k];
  }
  inner_->forward(buf);
  for (std::size_t k = 0; k < m; ++k) buf[k] *= kernel_fft_[k];
  inner_->inverse(buf);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) {
    const cd y = buf[k] * inv_m * chirp_[k];
    data[k] = inverse ? std::conj(y) : y;
  }
}

std::shared_ptr<const FftPlan> FftPlan::get(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const FftPlan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const FftPlan>(n);
  return slot;
}

namespace {

// In-place 2-D transform of one H x W plane stored row-major.
void transform_plane(std::vector<cd>& plane, std::size_t h, std::size_t w, bool inverse) {
  const auto row_plan = FftPlan::get(w);
  const auto col_plan = FftPlan::get(h);
  for (std::size_t y = 0; y < h; ++y) {
    std::span<cd> row(plane.data() + y * w, w);
    inverse ? row_plan->inverse(row) : row_plan->forward(row);
  }
  std::vector<cd> col(h);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) col[y] = plane[y * w + x];
    inverse ? col_plan->inverse(col) : col_plan->forward(col);
    for (std::size_t y = 0; y < h; ++y) plane[y * w + x] = col[y];
  }
}

template <typename T, typename Load>
ComplexPlane<T> fft2_impl(const Shape& s, bool inverse, Load&& load) {
  ComplexPlane<T> out{BasicTensor<T>(s), BasicTensor<T>(s)};
  const auto h = static_cast<std::size_t>(s.h), w = static_cast<std::size_t>(s.w);
  const std::int64_t planes = s.n * s.c;
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < planes; ++p) {
    std::vector<cd> buf(h * w);
    load(p, buf);
    transform_plane(buf, h, w, inverse);
    T* re = out.real.data().data() + p * s.plane();
    T* im = out.imag.data().data() + p * s.plane();
    for (std::size_t i = 0; i < h * w; ++i) {
      re[i] = static_cast<T>(buf[i].real());
      im[i] = static_cast<T>(buf[i].imag());
    }
  }
  return out;
}

}  // namespace

template <typename T>
ComplexPlane<T> fft2(const BasicTensor<T>& input) {
  const Shape& s = input.shape();
  return fft2_impl<T>(s, false, [&](std::int64_t p, std::vector<cd>& buf) {
    const T* src = input.data().data() + p * s.plane();
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = cd{static_cast<double>(src[i]), 0.0};
  });
}

template <typename T>
ComplexPlane<T> fft2(const ComplexPlane<T>& input, bool inverse) {
  const Shape& s = input.real.shape();
  if (input.imag.shape() != s) throw ShapeError("fft2: real/imag shape mismatch");
  return fft2_impl<T>(s, inverse, [&](std::int64_t p, std::vector<cd>& buf) {
    const T* re = input.real.data().data() + p * s.plane();
    const T* im = input.imag.data().data() + p * s.plane();
    for (std::size_t i = 0; i < buf.size(); ++i) {
      buf[i] = cd{static_cast<double>(re[i]), static_cast<double>(im[i])};
    }
  });
}

namespace {

template <typename T>
void require_same(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

// Spectrum of the difference; the transform is linear so one FFT suffices.
template <typename T>
ComplexPlane<T> diff_spectrum(const BasicTensor<T>& sr, const BasicTensor<T>& hr) {
  BasicTensor<double> d(sr.shape());
  for (std::int64_t i = 0; i < sr.numel(); ++i) {
    d[i] = static_cast<double>(sr[i]) - static_cast<double>(hr[i]);
  }
  auto f = fft2(d);
  return {f.real.template cast<T>(), f.imag.template cast<T>()};
}

template <typename T>
double l1_of(const ComplexPlane<T>& f) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < f.real.numel(); ++i) {
    acc += std::abs(static_cast<double>(f.real[i])) + std::abs(static_cast<double>(f.imag[i]));
  }
  return acc;
}

template <typename T>
T sign_of(T v) {
  return v > 0 ? T{1} : (v < 0 ? T{-1} : T{0});
}

}  // namespace

template <typename T>
T freq_loss_value(const BasicTensor<T>& sr, const BasicTensor<T>& hr) {
  require_same(sr, hr, "freq_loss");
  const auto f = diff_spectrum(sr, hr);
  return static_cast<T>(l1_of(f) / static_cast<double>(sr.numel()));
}

template <typename T>
ad::Var<T> freq_loss(const ad::Var<T>& sr, const ad::Var<T>& hr) {
  require_same(sr.value(), hr.value(), "freq_loss");
  auto spec = std::make_shared<ComplexPlane<T>>(diff_spectrum(sr.value(), hr.value()));
  const std::int64_t m = sr.value().numel();
  const T value = static_cast<T>(l1_of(*spec) / static_cast<double>(m));
  ad::Tape<T>& tape = sr.tape() ? *sr.tape() : *hr.tape();
  return tape.record(
      BasicTensor<T>::scalar(value), {sr, hr},
      [spec, m](const BasicTensor<T>& go, ad::GradSink<T>& sink) {
        // d/dx sum_k a_k Re X_k + b_k Im X_k = Re F(a - i b), a, b = signs.
        ComplexPlane<double> weights{BasicTensor<double>(spec->real.shape()),
                                     BasicTensor<double>(spec->real.shape())};
        for (std::int64_t i = 0; i < m; ++i) {
          weights.real[i] = sign_of(static_cast<double>(spec->real[i]));
          weights.imag[i] = -sign_of(static_cast<double>(spec->imag[i]));
        }
        const auto f = fft2(weights, false);
        const double s = static_cast<double>(go.item()) / static_cast<double>(m);
        BasicTensor<T> g(spec->real.shape());
        for (std::int64_t i = 0; i < m; ++i) g[i] = static_cast<T>(f.real[i] * s);
        if (sink.wants(1)) sink.accumulate(1, kernels::scale(g, T{-1}));
        if (sink.wants(0)) sink.accumulate(0, std::move(g));
      });
}

template <typename T>
ad::Var<T> total_loss(const ad::Var<T>& sr, const ad::Var<T>& hr, double lambda) {
  if (lambda < 0) throw ContractError("total_loss: lambda must be >= 0");
  ad::Var<T> loss = ad::mean_abs_diff(sr, hr);
  if (lambda == 0.0) return loss;
  return ad::add(loss, ad::scale(freq_loss(sr, hr), static_cast<T>(lambda)));
}

#define DIMOSR_INSTANTIATE(T)                                                  \
  template ComplexPlane<T> fft2(const BasicTensor<T>&);                        \
  template ComplexPlane<T> fft2(const ComplexPlane<T>&, bool);                 \
  template T freq_loss_value(const BasicTensor<T>&, const BasicTensor<T>&);    \
  template ad::Var<T> freq_loss(const ad::Var<T>&, const ad::Var<T>&);         \
  template ad::Var<T> total_loss(const ad::Var<T>&, const ad::Var<T>&, double);

DIMOSR_INSTANTIATE(float)
DIMOSR_INSTANTIATE(double)
#undef DIMOSR_INSTANTIATE

}  // namespace dimosr
