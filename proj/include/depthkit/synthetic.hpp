// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic scenes (depth-correlated shaded rectangles) for
// desk-scale training runs, demos and the acceptance suite.
#pragma once

#include <filesystem>

#include "depthkit/dataset.hpp"

namespace depthkit {

struct SyntheticDatasetSpec {
  int count = 8;
  int size = 64;  // square frames, multiple of 32
  int num_scenes = 4;
  uint64_t seed = 7;
  double depth_png_scale = 1000.0;
  int vector_tokens = 1;  // width of the precomputed conditioning vectors / 768
};

/// Generates one scene in memory: image in [0,1], depth in roughly (0.5, 9].
struct SyntheticScene {
  Image<double> image;
  Arr<double> depth;
  int scene_index = 0;
};

SyntheticScene make_synthetic_scene(int size, int index, int num_scenes, uint64_t seed);

/// Writes images/, depths/, train.txt, test.txt (both with scene indices) and
/// vectors.txt (precomputed conditioning vectors keyed by sample id).
void write_synthetic_dataset(const std::filesystem::path& root, const SyntheticDatasetSpec& spec);

}  // namespace depthkit
