// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset profiles, split listings ("image_path depth_path [scene_index]"),
// 16-bit PNG depth decoding, and the crop/resize policy that lands inputs on
// 32-divisible dims.
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "depthkit/config.hpp"
#include "depthkit/image_io.hpp"
#include "depthkit/latent_codec.hpp"
#include "depthkit/metrics.hpp"

namespace depthkit {

/// Per-dataset conventions: PNG scale, evaluation cap/crop, input sizing and
/// the metric-depth bound of the head.
struct DatasetProfile {
  std::string name;
  double depth_png_scale = 1000.0;  // PNG units per meter
  double cap = 10.0;                // evaluation cap, meters
  double d_min = 1e-3;              // excludes sensor zeros
  EvalCrop crop = EvalCrop::kNone;
  int input_height = 448;  // 0 keeps native dims (floored to multiples of 32)
  int input_width = 608;
  double d_max = 10.0;
};

DatasetProfile profile_by_name(const std::string& name);

/// Profile with config-file overrides applied (zero/empty keys keep the
/// profile defaults).
DatasetProfile resolve_profile(const RunConfig& cfg);

struct SplitEntry {
  std::string image_path;
  std::string depth_path;
  std::optional<int> scene_index;
};

/// Parses a split listing; malformed lines raise DataError with the line
/// number. Files are not touched here.
std::vector<SplitEntry> read_split_listing(const std::filesystem::path& listing);

struct DepthSample {
  std::string id;
  Image<double> image;
  std::optional<Arr<double>> gt_depth;  // meters
  MaskArray mask;                       // valid && (d_min, cap], plus eval crop if requested
  std::optional<int> scene_index;
};

/// Center-crop (to the target aspect, or exactly when the frame is larger in
/// both dims) followed by a resize to the 32-divisible target. Depth is
/// resampled with nearest neighbor to avoid mixing valid and invalid pixels.
struct SizingPolicy {
  int target_h = 0;  // 0 -> floor the native dims to multiples of 32
  int target_w = 0;

  std::pair<int, int> output_dims(int h, int w) const;
  RawImage apply(const RawImage& img) const;
  Arr<double> apply_depth(const Arr<double>& depth) const;
};

/// Lazily materializes samples from a listing. Thread-safe: `load` is const
/// and may be called from several workers at once.
class SampleLoader {
 public:
  SampleLoader(std::filesystem::path root, std::vector<SplitEntry> entries,
               DatasetProfile profile, bool apply_eval_crop);

  size_t size() const { return entries_.size(); }
  const DatasetProfile& profile() const { return profile_; }
  const std::vector<SplitEntry>& entries() const { return entries_; }

  /// Throws DataError naming the sample id on missing/broken files.
  DepthSample load(size_t index) const;

 private:
  std::filesystem::path root_;
  std::vector<SplitEntry> entries_;
  DatasetProfile profile_;
  SizingPolicy sizing_;
  bool apply_eval_crop_;
};

/// Deterministic parallel map: fn(i) for i in [0, n), results kept in index
/// order regardless of worker count.
void parallel_for_indices(size_t n, int workers, const std::function<void(size_t)>& fn);

/// Sample id derived from the image path (stem without extension).
std::string sample_id_from_path(const std::string& image_path);

}  // namespace depthkit
