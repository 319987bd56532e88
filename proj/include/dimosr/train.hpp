// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training loop: sample -> augment -> forward -> MAE + lambda * FFT loss ->
// backward -> Adam -> cosine schedule, with periodic evaluation and
// checkpoints.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dimosr/checkpoint.hpp"
#include "dimosr/data.hpp"
#include "dimosr/metrics.hpp"
#include "dimosr/model.hpp"

namespace dimosr {

struct TrainConfig {
  std::int64_t iterations = 500000;
  int batch_size = 24;
  /// LR patch side; HR patches are scale times larger.
  int patch_lr = 128;
  double lr_start = 1e-3;
  double lr_min = 1e-5;
  /// Weight of the frequency loss.
  double lambda = 0.05;
  std::uint64_t seed = 0;
  /// Cadences in iterations; 0 disables.
  std::int64_t eval_every = 5000;
  std::int64_t checkpoint_every = 50000;
  std::int64_t log_every = 100;
  /// Recent losses kept in checkpoint metadata.
  int loss_tail = 100;
  bool augment = true;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);

struct EvalResult {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalSummary {
  std::vector<EvalResult> images;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

/// Full-image evaluation: SR is clamped to [0, 1] before the metrics.
EvalSummary evaluate(const Network<float>& net, const std::vector<ImagePair>& pairs,
                     const EvalProtocol& protocol);

/// Same protocol for plain bicubic upsampling of the LR images.
EvalSummary evaluate_bicubic(const std::vector<ImagePair>& pairs, int scale,
                             const EvalProtocol& protocol);

struct TrainOptions {
  /// Checkpoints and the metrics log go here; empty disables file output.
  std::filesystem::path output_dir;
  std::vector<ImagePair> validation;
  EvalProtocol protocol{};
  /// Continue from a previous checkpoint instead of a fresh model.
  std::optional<Checkpoint> resume;
};

struct TrainResult {
  Checkpoint checkpoint;
  /// Loss of every iteration run in this call.
  std::vector<double> losses;
  /// (iteration, summary) for every evaluation performed.
  std::vector<std::pair<std::int64_t, EvalSummary>> evaluations;
  /// Training images skipped because they are smaller than the patch.
  std::vector<std::string> skipped;
};

/// Builds the model from `model` (seeded by train.seed) unless resuming,
/// then runs train.iterations total iterations. Throws TrainingError on a
/// non-finite loss after writing a diagnostic dump when output_dir is set.
TrainResult train(const ModelConfig& model, const TrainConfig& train,
                  const std::vector<ImagePair>& data, const TrainOptions& options = {});

/// The batch for iteration `it`: sample k = it * batch + b draws from
/// Rng::stream(seed, k), so batches do not depend on scheduling.
std::vector<PairSample> draw_batch(const std::vector<ImagePair>& data, const TrainConfig& train,
                                   int scale, std::int64_t it);

}  // namespace dimosr
