// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// The super-resolution network: shallow 3x3 feature extraction, residual
// groups of dilated modulation blocks (DMB = FEB followed by ERB), fusion of
// the concatenated group outputs, and a 1x1 -> 3x3 -> pixel-shuffle head.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dimosr/autodiff.hpp"
#include "dimosr/parameters.hpp"
#include "json.hpp"

namespace dimosr {

struct ModelConfig {
  int channels = 36;
  int num_blocks = 18;
  /// Blocks per residual group.
  int group_size = 6;
  std::vector<int> dilations{4, 8, 12, 16};
  /// Channels per FEB branch.
  int branch_width = 9;
  int erb_hidden = 18;
  /// Number of 3x3 convolutions inside the ERB bottleneck.
  int erb_depth = 2;
  int scale = 4;
  bool enable_attention = true;
  bool enable_modulation = true;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  int num_groups() const { return num_blocks / group_size; }
  /// Output channels of the FEB coefficient conv: 2C for (alpha, beta) when
  /// modulation is on, plus C for gamma when attention is on.
  int coeff_channels() const {
    return (enable_modulation ? 2 * channels : 0) + (enable_attention ? channels : 0);
  }
  /// Number of FEB outputs (out1, out2) entering the fusion conv.
  int feb_outputs() const { return (enable_modulation ? 1 : 0) + (enable_attention ? 1 : 0); }

  /// Named presets: "dimosr", "dimosr-s", "toy".
  static ModelConfig preset(std::string_view name, int scale);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// One convolution of the network, in forward order.
struct ConvLayerSpec {
  std::string name;  // parameter prefix, e.g. "dmb.3.feb.coeff"
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int dilation = 1;

  ConvGeometry geometry() const { return {dilation, kernel == 3 ? dilation : 0}; }
  std::int64_t weight_count() const {
    return static_cast<std::int64_t>(in_channels) * out_channels * kernel * kernel;
  }
};

struct NormLayerSpec {
  std::string name;
  int channels = 0;
};

struct LayerTable {
  std::vector<ConvLayerSpec> convs;
  std::vector<NormLayerSpec> norms;
};

LayerTable describe_layers(const ModelConfig& config);

/// Trainable scalars implied by the config (closed form over the layer table).
std::int64_t param_count(const ModelConfig& config);

/// Multiply-accumulates of all convolutions for an output of out_h x out_w
/// pixels, evaluated at the LR resolution (out/scale); one MAC = one FLOP.
/// Normalization, activation and elementwise costs are excluded.
std::int64_t flops_count(const ModelConfig& config, std::int64_t out_h, std::int64_t out_w);

template <typename T>
struct Network {
  ModelConfig config;
  ParameterStore<T> params;

  template <typename U>
  Network<U> cast() const {
    return Network<U>{config, params.template cast<U>()};
  }
};

template <typename T>
std::int64_t param_count(const Network<T>& net) {
  return net.params.element_count();
}

/// Builds the network with fan-in scaled uniform conv weights, zero biases
/// and unit/zero LayerNorm gain/shift, deterministically from `seed`.
template <typename T>
Network<T> build_model(const ModelConfig& config, std::uint64_t seed);

/// X + Conv1x1(concat(out1, out2)) with out1 = alpha*Xn + beta and
/// out2 = sigmoid(gamma)*Xn; identity when both flags are off.
template <typename T>
ad::Var<T> feb_forward(const Network<T>& net, int block, const ad::Var<T>& x);

/// X + Expand(SiLU(Conv3x3 ... SiLU(Reduce(LayerNorm(X))))).
template <typename T>
ad::Var<T> erb_forward(const Network<T>& net, int block, const ad::Var<T>& x);

template <typename T>
ad::Var<T> dmb_forward(const Network<T>& net, int block, const ad::Var<T>& x);

/// Full network on an (N, 3, H, W) batch; returns (N, 3, sH, sW), unclamped.
template <typename T>
ad::Var<T> forward(const Network<T>& net, const ad::Var<T>& lr);

/// Inference without recording a tape.
template <typename T>
BasicTensor<T> infer(const Network<T>& net, const BasicTensor<T>& lr);

}  // namespace dimosr
