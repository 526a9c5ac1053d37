// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "depthkit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "depthkit/image_io.hpp"

namespace depthkit {

SyntheticScene make_synthetic_scene(int size, int index, int num_scenes, uint64_t seed) {
  Rng rng(derive_seed(derive_seed(seed, "scene"), static_cast<uint64_t>(index)));
  SyntheticScene scene;
  scene.scene_index = index % num_scenes;

  // Base depth: a tilted plane between roughly 3 and 8 meters.
  const double d0 = rng.uniform(3.5, 6.0);
  const double gy = rng.uniform(-1.5, 1.5);
  const double gx = rng.uniform(-1.5, 1.5);
  scene.depth = Arr<double>(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      scene.depth(y, x) = d0 + gy * (static_cast<double>(y) / size - 0.5) +
                          gx * (static_cast<double>(x) / size - 0.5);

  // Foreground boxes at closer depths.
  const int boxes = rng.uniform_int(2, 4);
  std::vector<double> albedo(static_cast<size_t>(size) * size, 1.0);
  for (int b = 0; b < boxes; ++b) {
    const int w = rng.uniform_int(size / 8, size / 2);
    const int h = rng.uniform_int(size / 8, size / 2);
    const int x0 = rng.uniform_int(0, size - w);
    const int y0 = rng.uniform_int(0, size - h);
    const double d = rng.uniform(0.8, d0 - 0.7);
    const double a = rng.uniform(0.5, 1.4);
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) {
        scene.depth(y, x) = d;
        albedo[static_cast<size_t>(y) * size + x] = a;
      }
  }

  // Shading falls off with depth; a per-scene tint keeps scene labels
  // informative for the conditioning ablations.
  const double tint[3] = {0.6 + 0.4 * ((scene.scene_index * 37) % 100) / 100.0,
                          0.6 + 0.4 * ((scene.scene_index * 61) % 100) / 100.0,
                          0.6 + 0.4 * ((scene.scene_index * 89) % 100) / 100.0};
  scene.image.data = Tensor<double>(3, size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double shade = std::clamp(1.15 - scene.depth(y, x) / 9.0, 0.05, 1.0) *
                           albedo[static_cast<size_t>(y) * size + x];
      for (int c = 0; c < 3; ++c)
        scene.image.data.at(c, y, x) =
            std::clamp(shade * tint[c] + rng.uniform(-0.02, 0.02), 0.0, 1.0);
    }
  return scene;
}

void write_synthetic_dataset(const std::filesystem::path& root, const SyntheticDatasetSpec& spec) {
  if (spec.size % 32 != 0) throw ConfigError("synthetic size must be a multiple of 32");
  std::filesystem::create_directories(root / "images");
  std::filesystem::create_directories(root / "depths");

  std::ofstream train(root / "train.txt"), test(root / "test.txt"), vecs(root / "vectors.txt");
  if (!train || !test || !vecs) throw DataError("cannot write dataset under " + root.string());

  Rng vec_rng(derive_seed(spec.seed, "vectors"));
  for (int i = 0; i < spec.count; ++i) {
    const SyntheticScene scene = make_synthetic_scene(spec.size, i, spec.num_scenes, spec.seed);
    char name[32];
    std::snprintf(name, sizeof(name), "s%03d", i);

    RawImage img;
    img.h = spec.size;
    img.w = spec.size;
    img.pixels.resize(static_cast<size_t>(spec.size) * spec.size * 3);
    for (int y = 0; y < spec.size; ++y)
      for (int x = 0; x < spec.size; ++x)
        for (int c = 0; c < 3; ++c)
          img.at(y, x, c) =
              static_cast<uint8_t>(std::lround(scene.image.data.at(c, y, x) * 255.0));
    write_image_png(root / "images" / (std::string(name) + ".png"), img);
    write_depth_png16(root / "depths" / (std::string(name) + ".png"),
                      quantize_depth(scene.depth, spec.depth_png_scale));

    const std::string line = "images/" + std::string(name) + ".png depths/" + std::string(name) +
                             ".png " + std::to_string(scene.scene_index);
    train << line << "\n";
    test << line << "\n";

    vecs << name;
    for (int k = 0; k < 768 * spec.vector_tokens; ++k) vecs << ' ' << vec_rng.normal(0.0, 0.5);
    vecs << "\n";
  }
}

}  // namespace depthkit
