// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// In-process implementations of the CLI subcommands. Each returns the
// process exit code: 0 ok, 2 config error, 3 data error, 4 numerical error.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace depthkit {

struct CommandOptions {
  std::filesystem::path config_path;  // empty -> built-in defaults
  std::filesystem::path data_root;
  std::filesystem::path out_dir = "out";
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> baseline_report;
  std::optional<long long> seed;
  std::string profile;   // overrides the config when non-empty
  std::string variant;   // ablate-conditioning: cide | one_hot | precomputed | all
  std::string split;     // evaluate: listing path relative to data_root (default from config)
  bool allow_config_mismatch = false;
  bool trace = false;    // predict: print per-stage shapes
};

int cmd_train(const CommandOptions& opts);
int cmd_evaluate(const CommandOptions& opts);
int cmd_predict(const CommandOptions& opts, const std::vector<std::filesystem::path>& images);
int cmd_ablate_conditioning(const CommandOptions& opts);

}  // namespace depthkit
