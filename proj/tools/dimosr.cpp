// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// dimosr: ingest | train | eval | infer | inspect | gradcheck | config

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "dimosr/checkpoint.hpp"
#include "dimosr/config.hpp"
#include "dimosr/data.hpp"
#include "dimosr/gradsuite.hpp"
#include "dimosr/image.hpp"
#include "dimosr/metrics.hpp"
#include "dimosr/model.hpp"
#include "dimosr/train.hpp"

namespace fs = std::filesystem;
using namespace dimosr;

namespace {

std::string flag_name(const std::string& key) {
  std::string s = "--" + key;
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

bool is_bool_key(const std::string& key) {
  return key == "model.enable_attention" || key == "model.enable_modulation" || key == "train.augment" ||
         key == "eval.y_only";
}

/// Preset, then config file, then dotted overrides.
struct ConfigArgs {
  std::string preset;
  int scale = 0;
  std::string file;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* app, const std::string& default_preset, const std::string& prefix_filter = "") {
    preset = default_preset;
    app->add_option("--preset", preset, "built-in preset: dimosr, dimosr-s, toy")->capture_default_str();
    app->add_option("--scale", scale, "upscaling factor (overrides the preset)");
    app->add_option("-c,--config", file, "config file (TOML subset)")->check(CLI::ExistingFile);
    for (const auto& key : RunConfig::keys()) {
      if (!prefix_filter.empty() && key.rfind(prefix_filter, 0) != 0) continue;
      auto& slot = overrides[key];
      CLI::Option* opt = is_bool_key(key) ? app->add_flag(flag_name(key) + "{true}", slot, RunConfig::describe(key))
                                          : app->add_option(flag_name(key), slot, RunConfig::describe(key));
      opt->group("Config overrides");
    }
  }

  RunConfig resolve() const {
    RunConfig rc = RunConfig::preset(preset, scale);
    if (!file.empty()) rc.apply_file(file);
    if (scale > 0) rc.model.scale = scale;
    for (const auto& [key, value] : overrides) {
      if (!value.empty()) rc.set(key, value);
    }
    rc.validate();
    return rc;
  }
};

std::string format_psnr(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void print_summary(const EvalSummary& s) {
  for (const auto& r : s.images) std::printf("%-40s PSNR %10s  SSIM %.6f\n", r.id.c_str(), format_psnr(r.psnr).c_str(), r.ssim);
  std::printf("%-40s PSNR %10s  SSIM %.6f\n", "mean", format_psnr(s.mean_psnr).c_str(), s.mean_ssim);
}

int cmd_ingest(const std::string& dir, int scale, bool no_lr, std::string out) {
  const IngestResult r = ingest_directory(dir, scale, !no_lr);
  for (const auto& f : r.failures) std::fprintf(stderr, "warning: unreadable: %s\n", f.c_str());
  if (out.empty()) out = (fs::path(dir) / ("manifest_x" + std::to_string(scale) + ".json")).string();
  r.manifest.save(out);
  std::printf("%zu images, %zu unreadable, manifest written to %s\n", r.manifest.entries.size(),
              r.failures.size(), out.c_str());
  return 0;
}

int cmd_train(const ConfigArgs& args, const std::string& resume) {
  const RunConfig rc = args.resolve();
  if (rc.train_manifest.empty()) throw ConfigError("train: data.train_manifest is required");
  const DatasetManifest train_m = DatasetManifest::load(rc.train_manifest);
  if (train_m.scale != rc.model.scale) {
    throw ConfigError("train manifest was ingested at x" + std::to_string(train_m.scale) + " but the model is x" +
                      std::to_string(rc.model.scale));
  }
  TrainOptions opts;
  opts.output_dir = rc.output_dir;
  opts.protocol = rc.protocol();
  if (!rc.val_manifest.empty()) opts.validation = load_pairs(DatasetManifest::load(rc.val_manifest));
  if (!resume.empty()) opts.resume = load_checkpoint(resume);
  fs::create_directories(rc.output_dir);
  std::ofstream(fs::path(rc.output_dir) / "config.toml") << rc.to_toml();

  const TrainResult r = train(rc.model, rc.train, load_pairs(train_m), opts);
  if (!r.losses.empty()) std::printf("final loss %.6f after %lld iterations\n", r.losses.back(),
                                     static_cast<long long>(r.checkpoint.metadata.iteration));
  if (!r.evaluations.empty()) {
    const auto& [it, s] = r.evaluations.back();
    std::printf("validation @%lld: PSNR %s SSIM %.6f\n", static_cast<long long>(it), format_psnr(s.mean_psnr).c_str(), s.mean_ssim);
  }
  std::printf("checkpoint: %s\n", (fs::path(rc.output_dir) / "final.dmsr").string().c_str());
  return 0;
}

int cmd_eval(const std::string& manifest_path, const std::string& checkpoint, const std::string& sr_dir,
             bool bicubic, int border_crop, bool rgb) {
  const DatasetManifest m = DatasetManifest::load(manifest_path);
  const std::vector<ImagePair> pairs = load_pairs(m);
  const EvalProtocol protocol{border_crop >= 0 ? border_crop : m.scale, !rgb};
  const int sources = (checkpoint.empty() ? 0 : 1) + (sr_dir.empty() ? 0 : 1) + (bicubic ? 1 : 0);
  if (sources != 1) throw ConfigError("eval: give exactly one of --checkpoint, --sr-dir, --bicubic");
  if (!checkpoint.empty()) {
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    if (ckpt.network.config.scale != m.scale) throw ConfigError("eval: checkpoint scale differs from the manifest scale");
    print_summary(evaluate(ckpt.network, pairs, protocol));
  } else if (bicubic) {
    print_summary(evaluate_bicubic(pairs, m.scale, protocol));
  } else {
    std::vector<EvalResult> rows;
    double sp = 0.0, ss = 0.0;
    for (const auto& p : pairs) {
      const Tensor sr = load_png(fs::path(sr_dir) / p.id);
      if (sr.shape() != p.hr.shape()) throw ShapeError("eval: " + p.id + " has shape " + sr.shape().str() + ", HR is " + p.hr.shape().str());
      rows.push_back({p.id, psnr(sr, p.hr, protocol), ssim(sr, p.hr, protocol)});
      sp += rows.back().psnr;
      ss += rows.back().ssim;
    }
    const double n = static_cast<double>(rows.size());
    print_summary({rows, sp / n, ss / n});
  }
  return 0;
}

int cmd_infer(const std::string& checkpoint, const std::string& in, const std::string& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const Tensor sr = infer(ckpt.network, load_png(in));
  save_png(sr, out);
  std::printf("wrote %s (%lldx%lld)\n", out.c_str(), static_cast<long long>(sr.w()), static_cast<long long>(sr.h()));
  return 0;
}

int cmd_inspect(const ConfigArgs& args, const std::string& checkpoint, std::int64_t width, std::int64_t height,
                bool layers) {
  ModelConfig cfg;
  std::int64_t params = 0;
  if (!checkpoint.empty()) {
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    cfg = ckpt.network.config;
    params = param_count(ckpt.network);
    std::printf("checkpoint: %s (iteration %lld)\n", checkpoint.c_str(), static_cast<long long>(ckpt.metadata.iteration));
  } else {
    cfg = args.resolve().model;
    params = param_count(build_model<float>(cfg, 0));
  }
  std::printf("config: %s\n", nlohmann::json(cfg).dump().c_str());
  std::printf("parameters: %lld (%.1fK)\n", static_cast<long long>(params), static_cast<double>(params) / 1e3);
  const std::int64_t flops = flops_count(cfg, height, width);
  std::printf("FLOPs at %lldx%lld output: %lld (%.2fG, MACs at %lldx%lld LR)\n", static_cast<long long>(width),
              static_cast<long long>(height), static_cast<long long>(flops), static_cast<double>(flops) / 1e9,
              static_cast<long long>(width / cfg.scale), static_cast<long long>(height / cfg.scale));
  if (layers) {
    const LayerTable t = describe_layers(cfg);
    std::printf("\n%-28s %6s %8s %5s %5s %9s\n", "layer", "kernel", "dilation", "in", "out", "params");
    for (const auto& c : t.convs) {
      std::printf("%-28s %4dx%d %8d %5d %5d %9lld\n", c.name.c_str(), c.kernel, c.kernel, c.dilation, c.in_channels,
                  c.out_channels, static_cast<long long>(c.weight_count() + c.out_channels));
    }
    for (const auto& n : t.norms) {
      std::printf("%-28s %6s %8s %5d %5d %9d\n", n.name.c_str(), "LN", "-", n.channels, n.channels, 2 * n.channels);
    }
  }
  return 0;
}

int cmd_gradcheck(const ConfigArgs& args, double tolerance, std::int64_t elements, int size) {
  GradSuiteOptions opts;
  opts.model = args.resolve().model;
  opts.tolerance = tolerance;
  opts.model_elements = elements;
  opts.model_input = Shape{1, 3, size, size};
  bool ok = true;
  run_grad_suite(opts, [&](const GradSuiteCase& c) {
    ok = ok && c.passed;
    std::printf("%s  %-45s max rel err %.3e  (%zu probed, %zu non-converging)\n", c.passed ? "ok  " : "FAIL",
                c.name.c_str(), c.report.max_rel_error(), c.report.checked(), c.report.degenerate_count());
    std::fflush(stdout);
  });
  std::printf("%s\n", ok ? "gradient checks passed" : "gradient checks FAILED");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* level = std::getenv("DIMOSR_LOG")) spdlog::set_level(spdlog::level::from_str(level));

  CLI::App app{"dimosr: dilated modulation super-resolution"};
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "scan a directory of HR PNGs and write a manifest");
  std::string ingest_dir, ingest_out;
  int ingest_scale = 4;
  bool ingest_no_lr = false;
  ingest->add_option("dir", ingest_dir, "directory of HR PNGs")->required()->check(CLI::ExistingDirectory);
  ingest->add_option("-s,--scale", ingest_scale, "downscaling factor")->capture_default_str();
  ingest->add_option("-o,--output", ingest_out, "manifest path (default <dir>/manifest_x<scale>.json)");
  ingest->add_flag("--no-lr", ingest_no_lr, "do not pre-generate LR images");

  auto* train_cmd = app.add_subcommand("train", "train a model");
  ConfigArgs train_args;
  std::string resume;
  train_args.attach(train_cmd, "toy");
  train_cmd->add_option("--resume", resume, "continue from a checkpoint")->check(CLI::ExistingFile);

  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM on a manifest");
  std::string eval_manifest, eval_ckpt, eval_sr_dir;
  bool eval_bicubic = false, eval_rgb = false;
  int eval_crop = -1;
  eval_cmd->add_option("manifest", eval_manifest, "dataset manifest")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("checkpoint", eval_ckpt, "model checkpoint")->check(CLI::ExistingFile);
  eval_cmd->add_option("--sr-dir", eval_sr_dir, "evaluate existing SR PNGs (same relative paths as HR)");
  eval_cmd->add_flag("--bicubic", eval_bicubic, "evaluate bicubic upsampling of the LR images");
  eval_cmd->add_option("--border-crop", eval_crop, "border pixels excluded (default: scale)");
  eval_cmd->add_flag("--rgb", eval_rgb, "average over RGB instead of luma");

  auto* infer_cmd = app.add_subcommand("infer", "super-resolve one PNG");
  std::string infer_ckpt, infer_in, infer_out;
  infer_cmd->add_option("checkpoint", infer_ckpt)->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("input", infer_in)->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("output", infer_out)->required();

  auto* inspect_cmd = app.add_subcommand("inspect", "parameter and FLOP counts, layer table");
  ConfigArgs inspect_args;
  std::string inspect_ckpt;
  std::int64_t inspect_w = 1280, inspect_h = 720;
  bool inspect_quiet = false;
  inspect_args.attach(inspect_cmd, "dimosr", "model.");
  inspect_cmd->add_option("checkpoint", inspect_ckpt, "inspect a checkpoint instead of a config")->check(CLI::ExistingFile);
  inspect_cmd->add_option("--width", inspect_w, "output width for the FLOP count")->capture_default_str();
  inspect_cmd->add_option("--height", inspect_h, "output height for the FLOP count")->capture_default_str();
  inspect_cmd->add_flag("--no-layers", inspect_quiet, "omit the layer table");

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference checks of all operations and the model");
  ConfigArgs grad_args;
  double grad_tol = 1e-4;
  std::int64_t grad_elems = 2;
  int grad_size = 8;
  grad_args.attach(grad_cmd, "dimosr", "model.");
  grad_cmd->add_option("--tolerance", grad_tol, "relative tolerance")->capture_default_str();
  grad_cmd->add_option("--elements", grad_elems, "probed elements per model tensor (<= 0: all)")->capture_default_str();
  grad_cmd->add_option("--size", grad_size, "LR input side of the model check")->capture_default_str();

  auto* config_cmd = app.add_subcommand("config", "print the resolved configuration as TOML");
  ConfigArgs config_args;
  config_args.attach(config_cmd, "dimosr");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(ingest_dir, ingest_scale, ingest_no_lr, ingest_out);
    if (*train_cmd) return cmd_train(train_args, resume);
    if (*eval_cmd) return cmd_eval(eval_manifest, eval_ckpt, eval_sr_dir, eval_bicubic, eval_crop, eval_rgb);
    if (*infer_cmd) return cmd_infer(infer_ckpt, infer_in, infer_out);
    if (*inspect_cmd) return cmd_inspect(inspect_args, inspect_ckpt, inspect_w, inspect_h, !inspect_quiet);
    if (*grad_cmd) return cmd_gradcheck(grad_args, grad_tol, grad_elems, grad_size);
    if (*config_cmd) {
      std::fputs(config_args.resolve().to_toml().c_str(), stdout);
      return 0;
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 1;
}
