// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "dimosr/config.hpp"

namespace dimosr {
namespace {

void expect_same(const RunConfig& a, const RunConfig& b) {
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.border_crop, b.border_crop);
  EXPECT_EQ(a.y_only, b.y_only);
  EXPECT_EQ(a.train_manifest, b.train_manifest);
  EXPECT_EQ(a.val_manifest, b.val_manifest);
  EXPECT_EQ(a.output_dir, b.output_dir);
}

TEST(Toml, ParsesSupportedSubset) {
  const auto m = parse_toml(R"(
# comment
top = 1
[model]
channels = 16   # trailing comment
dilations = [4, 8, 12]
enable-attention = false
[train]
lambda = 0.05
lr_start = 1e-3
[output]
dir = "runs/x # not a comment"
)");
  EXPECT_EQ(std::get<std::int64_t>(m.at("top")), 1);
  EXPECT_EQ(std::get<std::int64_t>(m.at("model.channels")), 16);
  EXPECT_EQ(std::get<std::vector<std::int64_t>>(m.at("model.dilations")), (std::vector<std::int64_t>{4, 8, 12}));
  EXPECT_EQ(std::get<bool>(m.at("model.enable-attention")), false);
  EXPECT_DOUBLE_EQ(std::get<double>(m.at("train.lambda")), 0.05);
  EXPECT_DOUBLE_EQ(std::get<double>(m.at("train.lr_start")), 1e-3);
  EXPECT_EQ(std::get<std::string>(m.at("output.dir")), "runs/x # not a comment");
}

TEST(Toml, SyntaxErrorsCarryLineNumbers) {
  try {
    parse_toml("[model]\nchannels 16\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_toml("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(parse_toml("[model\n"), ConfigError);
  EXPECT_THROW(parse_toml("x = \"open\n"), ConfigError);
}

TEST(RunConfig, UnknownKeysAreRejected) {
  RunConfig c = RunConfig::preset("dimosr");
  try {
    c.apply_text("[model]\nchanels = 8\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown config key"), std::string::npos) << e.what();
  }
  EXPECT_THROW(c.set("train.lamda", "0"), ConfigError);
  EXPECT_THROW(c.set("model.channels", "\"many\""), ConfigError);
}

TEST(RunConfig, OverridesExpressAblationArms) {
  RunConfig c = RunConfig::preset("dimosr", 4);
  c.set("model.enable-attention", "false");
  c.set("model.enable_modulation", "false");
  c.set("train.lambda", "0");
  c.set("model.dilations", "2,4");
  c.set("output.dir", "runs/ablation");
  c.set("eval.border-crop", "0");
  EXPECT_FALSE(c.model.enable_attention);
  EXPECT_FALSE(c.model.enable_modulation);
  EXPECT_EQ(c.train.lambda, 0.0);
  EXPECT_EQ(c.model.dilations, (std::vector<int>{2, 4}));
  EXPECT_EQ(c.output_dir, "runs/ablation");
  EXPECT_EQ(c.protocol().border_crop, 0);
  EXPECT_NO_THROW(c.validate());
  c.set("train.batch_size", "0");
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfig, BorderCropDefaultsToScale) {
  EXPECT_EQ(RunConfig::preset("dimosr", 4).protocol().border_crop, 4);
  EXPECT_EQ(RunConfig::preset("toy").protocol().border_crop, 2);
  EXPECT_TRUE(RunConfig::preset("toy").protocol().y_only);
}

TEST(RunConfig, PresetDefaults) {
  const RunConfig d = RunConfig::preset("dimosr", 4);
  EXPECT_EQ(d.train.iterations, 500000);
  EXPECT_EQ(d.train.batch_size, 24);
  EXPECT_EQ(d.train.patch_lr, 128);
  EXPECT_DOUBLE_EQ(d.train.lr_start, 1e-3);
  EXPECT_DOUBLE_EQ(d.train.lr_min, 1e-5);
  EXPECT_DOUBLE_EQ(d.train.lambda, 0.05);
  const RunConfig t = RunConfig::preset("toy");
  EXPECT_EQ(t.model.channels, 16);
  EXPECT_EQ(t.model.num_blocks, 4);
  EXPECT_EQ(t.model.num_groups(), 2);
  EXPECT_EQ(t.model.scale, 2);
  EXPECT_EQ(t.train.iterations, 2000);
}

TEST(RunConfig, TomlRoundTrip) {
  for (const char* name : {"dimosr", "dimosr-s", "toy"}) {
    RunConfig a = RunConfig::preset(name);
    a.set("eval.border_crop", "3");
    a.set("data.train-manifest", "\"data/train.json\"");
    RunConfig b = RunConfig::preset("dimosr", 2);
    b.apply_text(a.to_toml());
    expect_same(a, b);
  }
}

class ShippedConfigs : public ::testing::TestWithParam<const char*> {};

TEST_P(ShippedConfigs, MatchBuiltInPreset) {
  RunConfig from_file = RunConfig::preset("dimosr", 2);
  from_file.apply_file(std::filesystem::path(DIMOSR_SOURCE_DIR) / "configs" / (std::string(GetParam()) + ".toml"));
  expect_same(from_file, RunConfig::preset(GetParam()));
}

INSTANTIATE_TEST_SUITE_P(Presets, ShippedConfigs, ::testing::Values("dimosr", "dimosr-s", "toy"),
                         [](const auto& info) {
                           std::string s = info.param;
                           std::erase(s, '-');
                           return s;
                         });

TEST(RunConfig, KeysAreDocumented) {
  const auto keys = RunConfig::keys();
  EXPECT_GE(keys.size(), 25u);
  for (const auto& k : keys) EXPECT_FALSE(RunConfig::describe(k).empty()) << k;
}

}  // namespace
}  // namespace dimosr
