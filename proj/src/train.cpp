// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "dimosr/train.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include "dimosr/optim.hpp"
#include "dimosr/signal.hpp"

namespace dimosr {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("train config: " + msg); };
  if (iterations < 0) fail("iterations must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (patch_lr < 1) fail("patch_lr must be >= 1");
  if (!(lr_start >= 0.0) || !(lr_min >= 0.0)) fail("learning rates must be >= 0");
  if (lr_min > lr_start) fail("lr_min must not exceed lr_start");
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (eval_every < 0 || checkpoint_every < 0 || log_every < 0) fail("cadences must be >= 0");
  if (loss_tail < 0) fail("loss_tail must be >= 0");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"iterations", c.iterations}, {"batch_size", c.batch_size}, {"patch_lr", c.patch_lr},
       {"lr_start", c.lr_start},     {"lr_min", c.lr_min},         {"lambda", c.lambda},
       {"seed", c.seed},             {"eval_every", c.eval_every}, {"checkpoint_every", c.checkpoint_every},
       {"log_every", c.log_every},   {"loss_tail", c.loss_tail},   {"augment", c.augment}};
}

namespace {

EvalSummary summarize(std::vector<EvalResult> images) {
  EvalSummary s;
  s.images = std::move(images);
  if (s.images.empty()) return s;
  for (const auto& r : s.images) {
    s.mean_psnr += r.psnr;
    s.mean_ssim += r.ssim;
  }
  s.mean_psnr /= static_cast<double>(s.images.size());
  s.mean_ssim /= static_cast<double>(s.images.size());
  return s;
}

Tensor clamp01(Tensor t) {
  for (float& v : t.data()) v = std::clamp(v, 0.0f, 1.0f);
  return t;
}

}  // namespace

EvalSummary evaluate(const Network<float>& net, const std::vector<ImagePair>& pairs,
                     const EvalProtocol& protocol) {
  std::vector<EvalResult> out;
  for (const auto& p : pairs) {
    const Tensor sr = clamp01(infer(net, p.lr));
    out.push_back({p.id, psnr(sr, p.hr, protocol), ssim(sr, p.hr, protocol)});
  }
  return summarize(std::move(out));
}

EvalSummary evaluate_bicubic(const std::vector<ImagePair>& pairs, int scale,
                             const EvalProtocol& protocol) {
  std::vector<EvalResult> out;
  for (const auto& p : pairs) {
    const Tensor up = clamp01(bicubic_resize(p.lr, static_cast<double>(scale)));
    out.push_back({p.id, psnr(up, p.hr, protocol), ssim(up, p.hr, protocol)});
  }
  return summarize(std::move(out));
}

std::vector<PairSample> draw_batch(const std::vector<ImagePair>& data, const TrainConfig& train,
                                   int scale, std::int64_t it) {
  if (data.empty()) throw ContractError("draw_batch: no training images");
  std::vector<PairSample> batch(static_cast<std::size_t>(train.batch_size));
  std::vector<int> failed(batch.size(), 0);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < train.batch_size; ++b) {
    const auto k = static_cast<std::uint64_t>(it) * static_cast<std::uint64_t>(train.batch_size) +
                   static_cast<std::uint64_t>(b);
    Rng rng = Rng::stream(train.seed, k);
    const auto& pair = data[rng.below(data.size())];
    auto s = sample_patch(pair, scale, train.patch_lr, rng);
    if (!s) {
      failed[static_cast<std::size_t>(b)] = 1;
      continue;
    }
    batch[static_cast<std::size_t>(b)] = train.augment ? augment(*s, rng) : std::move(*s);
  }
  if (std::count(failed.begin(), failed.end(), 1) > 0) {
    throw ContractError("draw_batch: a training image is smaller than the " +
                        std::to_string(train.patch_lr) + "px patch");
  }
  return batch;
}

TrainResult train(const ModelConfig& model, const TrainConfig& cfg,
                  const std::vector<ImagePair>& data, const TrainOptions& options) {
  model.validate();
  cfg.validate();
  const int scale = model.scale;

  TrainResult result;
  std::vector<ImagePair> usable;
  for (const auto& p : data) {
    if (p.lr.h() < cfg.patch_lr || p.lr.w() < cfg.patch_lr) {
      spdlog::warn("skipping '{}': LR {}x{} smaller than patch {}", p.id, p.lr.h(), p.lr.w(), cfg.patch_lr);
      result.skipped.push_back(p.id);
    } else {
      usable.push_back(p);
    }
  }
  if (usable.empty()) throw ConfigError("train: no training image is large enough for the patch size");

  Checkpoint& ckpt = result.checkpoint;
  if (options.resume) {
    ckpt = *options.resume;
    if (!(ckpt.network.config == model)) throw ConfigError("train: resume checkpoint has a different model config");
    if (ckpt.rng.seed != cfg.seed) throw ConfigError("train: resume checkpoint was trained with a different seed");
  } else {
    ckpt.network = build_model<float>(model, cfg.seed);
    ckpt.rng.seed = cfg.seed;
  }
  if (!ckpt.optimizer) ckpt.optimizer = AdamState::for_params(ckpt.network.params);
  AdamState& adam = *ckpt.optimizer;
  std::deque<double> tail(ckpt.metadata.loss_tail.begin(), ckpt.metadata.loss_tail.end());

  std::ofstream metrics_log;
  const bool files = !options.output_dir.empty();
  if (files) {
    fs::create_directories(options.output_dir);
    metrics_log.open(options.output_dir / "metrics.jsonl",
                     options.resume ? std::ios::app : std::ios::trunc);
    if (!metrics_log) throw Error("cannot open metrics log in " + options.output_dir.string());
  }

  auto write_checkpoint = [&](const fs::path& name) {
    ckpt.metadata.loss_tail.assign(tail.begin(), tail.end());
    if (files) save_checkpoint(ckpt, options.output_dir / name);
  };

  auto run_eval = [&](std::int64_t iteration, double lr, double loss) {
    const EvalSummary s = evaluate(ckpt.network, options.validation, options.protocol);
    result.evaluations.emplace_back(iteration, s);
    spdlog::info("iter {} eval psnr {:.4f} ssim {:.5f}", iteration, s.mean_psnr, s.mean_ssim);
    if (files) {
      nlohmann::json line{{"iteration", iteration}, {"lr", lr}, {"loss", loss},
                          {"eval", {{"val", {{"psnr", s.mean_psnr}, {"ssim", s.mean_ssim}}}}}};
      metrics_log << line.dump() << '\n' << std::flush;
    }
  };

  for (std::int64_t it = ckpt.metadata.iteration; it < cfg.iterations; ++it) {
    const double lr = cosine_lr(it, cfg.iterations, cfg.lr_start, cfg.lr_min);
    const std::vector<PairSample> batch = draw_batch(usable, cfg, scale, it);
    std::vector<Tensor> lrs, hrs;
    for (const auto& s : batch) {
      lrs.push_back(s.lr);
      hrs.push_back(s.hr);
    }

    ad::Tape<float> tape;
    const ad::Var<float> sr = forward(ckpt.network, tape.constant(kernels::stack_batch(lrs)));
    const ad::Var<float> loss = total_loss(sr, tape.constant(kernels::stack_batch(hrs)), cfg.lambda);
    const double value = loss.value().item();
    if (!std::isfinite(value)) {
      std::ostringstream msg;
      msg << "non-finite loss " << value << " at iteration " << it << " (lr " << lr << ", batch id " << it << ")";
      if (files) {
        nlohmann::json dump{{"iteration", it}, {"lr", lr}, {"batch_id", it}, {"loss", std::to_string(value)}};
        for (const auto& s : batch) {
          dump["samples"].push_back({{"source", s.source_id}, {"origin", {s.origin_y, s.origin_x}}});
        }
        std::ofstream(options.output_dir / "nonfinite_dump.json") << dump.dump(2) << '\n';
      }
      throw TrainingError(msg.str());
    }
    const GradientMap<float> grads = tape.backward(loss);
    adam_step(ckpt.network.params, grads, adam, lr);

    result.losses.push_back(value);
    tail.push_back(value);
    while (tail.size() > static_cast<std::size_t>(cfg.loss_tail)) tail.pop_front();
    ckpt.metadata.iteration = it + 1;
    ckpt.rng.samples_drawn = static_cast<std::uint64_t>(it + 1) * static_cast<std::uint64_t>(cfg.batch_size);

    const std::int64_t done = it + 1;
    const bool last = done == cfg.iterations;
    if (cfg.log_every > 0 && (done % cfg.log_every == 0 || last)) {
      spdlog::info("iter {} lr {:.3e} loss {:.6f}", done, lr, value);
      if (files) {
        metrics_log << nlohmann::json{{"iteration", done}, {"lr", lr}, {"loss", value}}.dump() << '\n' << std::flush;
      }
    }
    if (!options.validation.empty() && (last || (cfg.eval_every > 0 && done % cfg.eval_every == 0))) {
      run_eval(done, lr, value);
    }
    if (cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 && !last) {
      write_checkpoint("checkpoint_" + std::to_string(done) + ".dmsr");
    }
  }
  write_checkpoint("final.dmsr");
  return result;
}

}  // namespace dimosr
