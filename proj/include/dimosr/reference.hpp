// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels. One output element per innermost loop, written
// straight from the defining sums. They exist for tests and for the kernel
// benchmark; production paths use dimosr::kernels.

#pragma once

#include "dimosr/kernels.hpp"

namespace dimosr::reference {

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, const ConvGeometry& g);

template <typename T>
BasicTensor<T> conv2d_grad_input(const BasicTensor<T>& grad_out, const BasicTensor<T>& weight,
                                 const Shape& input_shape, const ConvGeometry& g);

template <typename T>
BasicTensor<T> conv2d_grad_weight(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                  const Shape& weight_shape, const ConvGeometry& g);

template <typename T>
BasicTensor<T> pixel_shuffle(const BasicTensor<T>& input, int r);

template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& input, const BasicTensor<T>& gain,
                          const BasicTensor<T>& shift, double eps);

template <typename T>
LayerNormGrads<T> layer_norm_backward(const BasicTensor<T>& grad_out,
                                      const BasicTensor<T>& input, const BasicTensor<T>& gain,
                                      double eps);

}  // namespace dimosr::reference
