// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// depthkit CLI: train, evaluate, predict, ablate-conditioning.

#include <CLI11.hpp>

#include "depthkit/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"depthkit: conditional-diffusion monocular depth estimation toolkit"};
  app.require_subcommand(1);

  depthkit::CommandOptions opts;
  std::vector<std::filesystem::path> images;
  std::string baseline, seed_str;

  auto add_common = [&](CLI::App* cmd, bool needs_config, bool needs_checkpoint) {
    if (needs_config) cmd->add_option("--config", opts.config_path, "run configuration file");
    if (needs_checkpoint)
      cmd->add_option("--checkpoint", opts.checkpoint, "checkpoint file")->required();
    cmd->add_option("--out", opts.out_dir, "output directory (default: out)");
    cmd->add_option("--seed", seed_str, "override the config seed");
    cmd->add_option("--profile", opts.profile, "dataset profile override");
  };

  auto* train = app.add_subcommand("train", "train a model");
  add_common(train, true, false);
  train->add_option("--data-root", opts.data_root, "dataset root directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on a split");
  add_common(evaluate, false, true);
  evaluate->add_option("--data-root", opts.data_root, "dataset root directory")->required();
  evaluate->add_option("--split", opts.split, "split listing relative to the data root");
  evaluate->add_option("--baseline-report", baseline,
                       "summary.json of a baseline; enables the mRI aggregate");
  evaluate->add_flag("--allow-config-mismatch", opts.allow_config_mismatch,
                     "load a checkpoint whose config hash differs");

  auto* predict = app.add_subcommand("predict", "predict depth for images");
  add_common(predict, false, true);
  predict->add_option("images", images, "input images")->required();
  predict->add_flag("--trace", opts.trace, "verify and print per-stage shapes");
  predict->add_flag("--allow-config-mismatch", opts.allow_config_mismatch,
                    "load a checkpoint whose config hash differs");

  auto* ablate = app.add_subcommand("ablate-conditioning",
                                    "train/evaluate the conditioning variants");
  add_common(ablate, true, false);
  ablate->add_option("--data-root", opts.data_root, "dataset root directory")->required();
  ablate->add_option("--variant", opts.variant, "cide | one_hot | precomputed | all");

  CLI11_PARSE(app, argc, argv);

  if (!seed_str.empty()) {
    try {
      opts.seed = std::stoll(seed_str);
    } catch (...) {
      std::fprintf(stderr, "error: --seed expects an integer\n");
      return 2;
    }
  }
  if (!baseline.empty()) opts.baseline_report = baseline;

  if (train->parsed()) return depthkit::cmd_train(opts);
  if (evaluate->parsed()) return depthkit::cmd_evaluate(opts);
  if (predict->parsed()) return depthkit::cmd_predict(opts, images);
  if (ablate->parsed()) return depthkit::cmd_ablate_conditioning(opts);
  return 2;
}
