// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: one declarative file in a small TOML subset (tables,
// `key = value` with integers, floats, booleans, basic strings and flat
// arrays, `#` comments) plus dotted-path overrides such as
// `train.lambda=0` or `model.enable-attention=false`.

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dimosr/metrics.hpp"
#include "dimosr/model.hpp"
#include "dimosr/train.hpp"

namespace dimosr {

/// A parsed TOML scalar or flat array.
using TomlValue = std::variant<std::int64_t, double, bool, std::string, std::vector<std::int64_t>>;

/// Parses the supported subset into "table.key" -> value. Throws
/// ConfigError with the line number on syntax errors or duplicate keys.
std::map<std::string, TomlValue> parse_toml(std::string_view text);

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  /// Pixels cropped at each border for metrics; defaults to the scale.
  std::optional<int> border_crop;
  bool y_only = true;
  std::string train_manifest;
  std::string val_manifest;
  std::string output_dir = "runs/default";

  EvalProtocol protocol() const { return {border_crop.value_or(model.scale), y_only}; }

  /// Built-in presets mirroring configs/<name>.toml.
  static RunConfig preset(std::string_view name, int scale = 0);

  /// Applies every key of a config file (unknown keys are rejected).
  void apply_file(const std::filesystem::path& path);
  void apply_text(std::string_view toml);
  /// One override; `key` is "table.key" with '-' and '_' interchangeable,
  /// `value` in TOML syntax (bare words are taken as strings).
  void set(std::string_view key, std::string_view value);

  void validate() const;
  std::string to_toml() const;

  /// Schema keys in canonical "table.key" form, in declaration order.
  static std::vector<std::string> keys();
  /// Short help text for a schema key.
  static std::string describe(const std::string& key);
};

}  // namespace dimosr
