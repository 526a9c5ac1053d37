// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation harness: runs the pipeline over a split, writes per-sample CSV
// rows and an aggregate JSON summary (with the config hash), and computes the
// mean relative improvement against a baseline report when one is supplied.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "depthkit/metrics.hpp"
#include "depthkit/model.hpp"

namespace depthkit {

struct EvalOutcome {
  MetricReport aggregate;
  size_t n_evaluated = 0;
  size_t n_skipped = 0;               // samples without valid pixels
  std::vector<std::string> skipped_ids;
  std::optional<double> mri;
};

/// Evaluates every sample of the split. Writes out_dir/per_sample.csv and
/// out_dir/summary.json. Per-image averaging by default; the pooled variant
/// accumulates over all pixels (config switch). `eval_oracle_inject` replaces
/// predictions by ground truth to exercise the harness itself.
EvalOutcome evaluate_split(DepthModel& model, const SampleLoader& loader,
                           const std::filesystem::path& out_dir,
                           const std::optional<std::filesystem::path>& baseline_report = {});

/// Reads delta1/abs_rel/rmse (and friends) from a summary JSON.
MetricReport read_report_json(const std::filesystem::path& path);

void write_report_json(const std::filesystem::path& path, const MetricReport& report,
                       const std::string& config_hash, size_t n_samples, size_t n_skipped,
                       const std::optional<double>& mri);

}  // namespace depthkit
