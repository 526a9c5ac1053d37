// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint container: format version, canonical config snapshot and
// its hash, global step, RNG state, frozen-module fingerprints, and named
// float64 arrays (parameters plus optimizer moments).
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "depthkit/nn/module.hpp"
#include "depthkit/tensor.hpp"

namespace depthkit {

struct Checkpoint {
  static constexpr uint32_t kVersion = 1;

  uint32_t version = kVersion;
  std::string config_text;  // canonical serialization
  uint64_t config_hash = 0;
  uint64_t global_step = 0;
  std::string rng_state;
  std::vector<std::pair<std::string, uint64_t>> fingerprints;  // frozen modules
  std::map<std::string, Mat<double>> arrays;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Corrupt files raise DataError naming the byte offset; a version mismatch
/// is a hard error.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies arrays into the named parameters. Every parameter must be present
/// with matching dims; all offending arrays are collected into one
/// ContractError report before failing.
void apply_arrays(const std::map<std::string, Mat<double>>& arrays,
                  const std::vector<nn::Parameter<double>*>& params);

}  // namespace depthkit
