// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "dimosr/model.hpp"

#include <cmath>

#include "dimosr/rng.hpp"

namespace dimosr {

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (channels < 1) fail("channels must be positive");
  if (num_blocks < 1) fail("num_blocks must be positive");
  if (group_size < 1) fail("group_size must be positive");
  if (num_blocks % group_size != 0) {
    fail("num_blocks (" + std::to_string(num_blocks) + ") must be divisible by group_size (" +
         std::to_string(group_size) + ")");
  }
  if (dilations.empty()) fail("dilations must be non-empty");
  for (int d : dilations) {
    if (d < 1) fail("dilations must be positive");
  }
  if (branch_width < 1) fail("branch_width must be positive");
  if (erb_hidden < 1) fail("erb_hidden must be positive");
  if (erb_depth < 0) fail("erb_depth must be non-negative");
  if (scale < 2 || scale > 4) fail("scale must be 2, 3 or 4");
}

ModelConfig ModelConfig::preset(std::string_view name, int scale) {
  ModelConfig c;
  c.scale = scale;
  if (name == "dimosr") {
    c.channels = 36;
    c.num_blocks = 18;
    c.group_size = 6;
    c.branch_width = 9;
    c.erb_hidden = 18;
  } else if (name == "dimosr-s") {
    c.channels = 32;
    c.num_blocks = 16;
    c.group_size = 4;
    c.branch_width = 8;
    c.erb_hidden = 16;
  } else if (name == "toy") {
    c.channels = 16;
    c.num_blocks = 4;
    c.group_size = 2;
    c.branch_width = 4;
    c.erb_hidden = 8;
  } else {
    throw ConfigError("unknown model preset '" + std::string(name) + "'");
  }
  c.dilations = {4, 8, 12, 16};
  c.erb_depth = 2;
  c.validate();
  return c;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"channels", c.channels},
                     {"num_blocks", c.num_blocks},
                     {"group_size", c.group_size},
                     {"dilations", c.dilations},
                     {"branch_width", c.branch_width},
                     {"erb_hidden", c.erb_hidden},
                     {"erb_depth", c.erb_depth},
                     {"scale", c.scale},
                     {"enable_attention", c.enable_attention},
                     {"enable_modulation", c.enable_modulation}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("channels").get_to(c.channels);
  j.at("num_blocks").get_to(c.num_blocks);
  j.at("group_size").get_to(c.group_size);
  j.at("dilations").get_to(c.dilations);
  j.at("branch_width").get_to(c.branch_width);
  j.at("erb_hidden").get_to(c.erb_hidden);
  j.at("erb_depth").get_to(c.erb_depth);
  j.at("scale").get_to(c.scale);
  j.at("enable_attention").get_to(c.enable_attention);
  j.at("enable_modulation").get_to(c.enable_modulation);
}

namespace {

std::string block_prefix(int block) { return "dmb." + std::to_string(block); }

// Visits every layer in forward (and parameter registration) order.
template <typename OnConv, typename OnNorm>
void walk_layers(const ModelConfig& c, OnConv&& conv, OnNorm&& norm) {
  const int C = c.channels;
  conv(ConvLayerSpec{"shallow", 3, C, 3, 1});
  for (int b = 0; b < c.num_blocks; ++b) {
    const std::string p = block_prefix(b);
    if (c.feb_outputs() > 0) {
      norm(NormLayerSpec{p + ".feb.norm", C});
      for (std::size_t j = 0; j < c.dilations.size(); ++j) {
        const std::string bp = p + ".feb.branch." + std::to_string(j);
        conv(ConvLayerSpec{bp + ".pw", C, c.branch_width, 1, 1});
        conv(ConvLayerSpec{bp + ".dil", c.branch_width, c.branch_width, 3, c.dilations[j]});
      }
      const int concat = c.branch_width * static_cast<int>(c.dilations.size());
      conv(ConvLayerSpec{p + ".feb.coeff", concat, c.coeff_channels(), 1, 1});
      conv(ConvLayerSpec{p + ".feb.fuse", c.feb_outputs() * C, C, 1, 1});
    }
    norm(NormLayerSpec{p + ".erb.norm", C});
    conv(ConvLayerSpec{p + ".erb.reduce", C, c.erb_hidden, 1, 1});
    for (int j = 0; j < c.erb_depth; ++j) {
      conv(ConvLayerSpec{p + ".erb.conv." + std::to_string(j), c.erb_hidden, c.erb_hidden, 3, 1});
    }
    conv(ConvLayerSpec{p + ".erb.expand", c.erb_hidden, C, 1, 1});
  }
  conv(ConvLayerSpec{"fusion", c.num_groups() * C, C, 1, 1});
  conv(ConvLayerSpec{"head.pw", C, C, 1, 1});
  conv(ConvLayerSpec{"head.conv", C, 3 * c.scale * c.scale, 3, 1});
}

}  // namespace

LayerTable describe_layers(const ModelConfig& config) {
  config.validate();
  LayerTable t;
  walk_layers(
      config, [&](const ConvLayerSpec& s) { t.convs.push_back(s); },
      [&](const NormLayerSpec& s) { t.norms.push_back(s); });
  return t;
}

std::int64_t param_count(const ModelConfig& config) {
  const LayerTable t = describe_layers(config);
  std::int64_t total = 0;
  for (const auto& c : t.convs) total += c.weight_count() + c.out_channels;
  for (const auto& n : t.norms) total += 2 * n.channels;
  return total;
}

std::int64_t flops_count(const ModelConfig& config, std::int64_t out_h, std::int64_t out_w) {
  const LayerTable t = describe_layers(config);
  const std::int64_t lr_pixels = (out_h / config.scale) * (out_w / config.scale);
  std::int64_t macs_per_pixel = 0;
  for (const auto& c : t.convs) macs_per_pixel += c.weight_count();
  return macs_per_pixel * lr_pixels;
}

template <typename T>
Network<T> build_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Network<T> net{config, {}};
  Rng rng(seed);
  walk_layers(
      config,
      [&](const ConvLayerSpec& s) {
        const Shape ws{s.out_channels, s.in_channels, s.kernel, s.kernel};
        BasicTensor<T> w(ws);
        const double bound = 1.0 / std::sqrt(static_cast<double>(s.in_channels * s.kernel * s.kernel));
        for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-bound, bound));
        net.params.add(s.name + ".weight", std::move(w));
        net.params.add(s.name + ".bias", BasicTensor<T>::zeros(Shape::vector(s.out_channels)));
      },
      [&](const NormLayerSpec& s) {
        net.params.add(s.name + ".gain", BasicTensor<T>::ones(Shape::vector(s.channels)));
        net.params.add(s.name + ".shift", BasicTensor<T>::zeros(Shape::vector(s.channels)));
      });
  return net;
}

namespace {

template <typename T>
struct Scope {
  const Network<T>& net;
  ad::Tape<T>& tape;

  ad::Var<T> param(const std::string& name) const {
    return tape.parameter(name, net.params.at(name));
  }
  ad::Var<T> conv(const std::string& prefix, const ad::Var<T>& x, int kernel,
                  int dilation = 1) const {
    const ConvGeometry g{dilation, kernel == 3 ? dilation : 0};
    return ad::conv2d(x, param(prefix + ".weight"), param(prefix + ".bias"), g);
  }
  ad::Var<T> norm(const std::string& prefix, const ad::Var<T>& x) const {
    return ad::layer_norm(x, param(prefix + ".gain"), param(prefix + ".shift"));
  }
};

template <typename T>
void require_channels(const ad::Var<T>& x, int channels, const char* where) {
  if (x.shape().c != channels) {
    throw ShapeError(std::string(where) + ": expected " + std::to_string(channels) +
                     " channels, got " + std::to_string(x.shape().c));
  }
}

}  // namespace

template <typename T>
ad::Var<T> feb_forward(const Network<T>& net, int block, const ad::Var<T>& x) {
  const ModelConfig& c = net.config;
  require_channels(x, c.channels, "feb_forward");
  if (c.feb_outputs() == 0) return x;
  const Scope<T> s{net, *x.tape()};
  const std::string p = block_prefix(block) + ".feb";

  const ad::Var<T> xn = s.norm(p + ".norm", x);
  std::vector<ad::Var<T>> branches;
  for (std::size_t j = 0; j < c.dilations.size(); ++j) {
    const std::string bp = p + ".branch." + std::to_string(j);
    branches.push_back(s.conv(bp + ".dil", ad::silu(s.conv(bp + ".pw", xn, 1)), 3, c.dilations[j]));
  }
  const ad::Var<T> coeff = s.conv(p + ".coeff", ad::concat_channels(branches), 1);
  const auto parts = ad::chunk_channels(coeff, c.coeff_channels() / c.channels);

  std::vector<ad::Var<T>> outs;
  std::size_t next = 0;
  if (c.enable_modulation) {
    const auto& alpha = parts[next++];
    const auto& beta = parts[next++];
    outs.push_back(ad::add(ad::mul(alpha, xn), beta));
  }
  if (c.enable_attention) {
    const auto& gamma = parts[next++];
    outs.push_back(ad::mul(ad::sigmoid(gamma), xn));
  }
  const ad::Var<T> fused = s.conv(p + ".fuse", outs.size() == 1 ? outs[0] : ad::concat_channels(outs), 1);
  return ad::add(x, fused);
}

template <typename T>
ad::Var<T> erb_forward(const Network<T>& net, int block, const ad::Var<T>& x) {
  const ModelConfig& c = net.config;
  require_channels(x, c.channels, "erb_forward");
  const Scope<T> s{net, *x.tape()};
  const std::string p = block_prefix(block) + ".erb";
  ad::Var<T> h = ad::silu(s.conv(p + ".reduce", s.norm(p + ".norm", x), 1));
  for (int j = 0; j < c.erb_depth; ++j) h = ad::silu(s.conv(p + ".conv." + std::to_string(j), h, 3));
  return ad::add(x, s.conv(p + ".expand", h, 1));
}

template <typename T>
ad::Var<T> dmb_forward(const Network<T>& net, int block, const ad::Var<T>& x) {
  return erb_forward(net, block, feb_forward(net, block, x));
}

template <typename T>
ad::Var<T> forward(const Network<T>& net, const ad::Var<T>& lr) {
  const ModelConfig& c = net.config;
  require_channels(lr, 3, "forward");
  const Scope<T> s{net, *lr.tape()};
  ad::Var<T> group_in = s.conv("shallow", lr, 3);
  std::vector<ad::Var<T>> group_outputs;
  int block = 0;
  for (int g = 0; g < c.num_groups(); ++g) {
    ad::Var<T> h = group_in;
    for (int b = 0; b < c.group_size; ++b) h = dmb_forward(net, block++, h);
    group_in = ad::add(h, group_in);
    group_outputs.push_back(group_in);
  }
  const ad::Var<T> fused = s.conv("fusion", ad::concat_channels(group_outputs), 1);
  const ad::Var<T> head = s.conv("head.conv", s.conv("head.pw", fused, 1), 3);
  return ad::pixel_shuffle(head, c.scale);
}

template <typename T>
BasicTensor<T> infer(const Network<T>& net, const BasicTensor<T>& lr) {
  ad::Tape<T> tape(false);
  return forward(net, tape.constant(lr)).value();
}

#define DIMOSR_INSTANTIATE(T)                                                     \
  template Network<T> build_model<T>(const ModelConfig&, std::uint64_t);          \
  template ad::Var<T> feb_forward(const Network<T>&, int, const ad::Var<T>&);     \
  template ad::Var<T> erb_forward(const Network<T>&, int, const ad::Var<T>&);     \
  template ad::Var<T> dmb_forward(const Network<T>&, int, const ad::Var<T>&);     \
  template ad::Var<T> forward(const Network<T>&, const ad::Var<T>&);              \
  template BasicTensor<T> infer(const Network<T>&, const BasicTensor<T>&);

DIMOSR_INSTANTIATE(float)
DIMOSR_INSTANTIATE(double)
#undef DIMOSR_INSTANTIATE

}  // namespace dimosr
