// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Forward and backward numerical kernels. Everything here is OpenMP-parallel
// over independent output planes; every output element is reduced in a fixed
// order, so results do not depend on the thread count. Serial reference
// versions of the heavy kernels live in reference.hpp.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dimosr/tensor.hpp"

namespace dimosr {

/// Stride is always 1. For size-preserving 3x3 convolutions padding == dilation.
struct ConvGeometry {
  int dilation = 1;
  int padding = 0;
};

inline constexpr double kLayerNormEps = 1e-6;

/// Per-site statistics cached by layer_norm_forward for the backward pass.
template <typename T>
struct LayerNormStats {
  std::vector<T> mean;      // one per (n, y, x)
  std::vector<T> inv_std;   // 1 / sqrt(var + eps)
};

template <typename T>
struct LayerNormGrads {
  BasicTensor<T> input;
  BasicTensor<T> gain;
  BasicTensor<T> shift;
};

namespace kernels {

/// Output extent along one spatial axis; throws ShapeError if < 1.
std::int64_t conv_out_extent(std::int64_t in, std::int64_t kernel, const ConvGeometry& g);

/// Dilated cross-correlation (no kernel flip). `bias` may be empty.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, const ConvGeometry& g);

template <typename T>
BasicTensor<T> conv2d_grad_input(const BasicTensor<T>& grad_out, const BasicTensor<T>& weight,
                                 const Shape& input_shape, const ConvGeometry& g);

template <typename T>
BasicTensor<T> conv2d_grad_weight(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                  const Shape& weight_shape, const ConvGeometry& g);

/// Sum of grad_out over (n, y, x), shaped as a bias vector.
template <typename T>
BasicTensor<T> conv2d_grad_bias(const BasicTensor<T>& grad_out);

template <typename T>
BasicTensor<T> pixel_shuffle(const BasicTensor<T>& input, int r);

/// Inverse of pixel_shuffle; also its adjoint.
template <typename T>
BasicTensor<T> pixel_unshuffle(const BasicTensor<T>& input, int r);

/// Normalizes each (n, y, x) channel vector; gain/shift have C elements.
template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& input, const BasicTensor<T>& gain,
                          const BasicTensor<T>& shift, double eps,
                          LayerNormStats<T>* stats = nullptr);

template <typename T>
LayerNormGrads<T> layer_norm_backward(const BasicTensor<T>& grad_out,
                                      const BasicTensor<T>& input, const BasicTensor<T>& gain,
                                      const LayerNormStats<T>& stats);

template <typename T>
BasicTensor<T> silu(const BasicTensor<T>& input);
template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& input);
template <typename T>
BasicTensor<T> silu_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input);
/// Takes the forward *output* s = sigmoid(x): dx = g * s * (1 - s).
template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& output);

template <typename T>
BasicTensor<T> concat_channels(std::span<const BasicTensor<T>* const> inputs);
template <typename T>
BasicTensor<T> concat_channels(const std::vector<BasicTensor<T>>& inputs);

/// Channels [begin, end) of the input.
template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& input, std::int64_t begin, std::int64_t end);

template <typename T>
std::vector<BasicTensor<T>> chunk_channels(const BasicTensor<T>& input, std::int64_t k);

/// Concatenates along the batch axis.
template <typename T>
BasicTensor<T> stack_batch(const std::vector<BasicTensor<T>>& inputs);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T s);
/// dst += alpha * src
template <typename T>
void axpy(BasicTensor<T>& dst, T alpha, const BasicTensor<T>& src);

}  // namespace kernels
}  // namespace dimosr
