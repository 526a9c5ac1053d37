// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training-time augmentations: joint horizontal flip, photometric hue and
// brightness jitter, and depth-rendered rectangle pasting. Geometric
// transforms apply identically to image, depth and mask; photometric ones
// touch only the image.
#pragma once

#include "depthkit/dataset.hpp"
#include "depthkit/rng.hpp"

namespace depthkit {

struct AugmentPolicy {
  double flip_prob = 0.5;
  double hue_max = 0.1;         // fraction of the hue circle
  double brightness_max = 0.2;  // multiplier drawn from [1-b, 1+b]
  double cutdepth_p = 0.25;
  double cutdepth_alpha_max = 0.75;  // max rectangle side as a fraction of the frame

  static AugmentPolicy from_config(const RunConfig& cfg) {
    return {cfg.aug_flip_prob, cfg.aug_hue_max, cfg.aug_brightness_max, cfg.aug_cutdepth_p,
            cfg.aug_cutdepth_alpha};
  }

  bool is_identity() const {
    return flip_prob == 0 && hue_max == 0 && brightness_max == 0 && cutdepth_p == 0;
  }
};

// geometric primitives
void hflip(Tensor<double>& t);
void hflip(Arr<double>& a);
void hflip(MaskArray& m);

// photometric primitives (image only, values clamped to [0,1])
void add_hue(Tensor<double>& image, double delta);
void scale_brightness(Tensor<double>& image, double factor);

/// With probability p, replaces a random axis-aligned rectangle of the image
/// by the ground-truth depth rendered to three channels via min-max
/// normalization over the rectangle (constant depth renders as zeros). Depth
/// and mask are never modified.
Image<double> cut_depth(const Image<double>& image, const Arr<double>& gt_depth, double p,
                        double alpha_max, Rng& rng);

/// Full policy, deterministic given (sample.id, rng_seed). Depth and mask
/// change only under the joint flip.
DepthSample augment(const DepthSample& sample, uint64_t rng_seed, const AugmentPolicy& policy);

}  // namespace depthkit
