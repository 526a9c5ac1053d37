// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "depthkit/augment.hpp"

#include <algorithm>
#include <cmath>

namespace depthkit {

void hflip(Tensor<double>& t) {
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w / 2; ++x) {
      const Eigen::Index a = static_cast<Eigen::Index>(y) * t.w + x;
      const Eigen::Index b = static_cast<Eigen::Index>(y) * t.w + (t.w - 1 - x);
      t.data.col(a).swap(t.data.col(b));
    }
}

void hflip(Arr<double>& a) { a = a.rowwise().reverse().eval(); }

void hflip(MaskArray& m) { m = m.rowwise().reverse().eval(); }

namespace {

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  v = mx;
  const double d = mx - mn;
  s = mx == 0 ? 0 : d / mx;
  if (d == 0) {
    h = 0;
  } else if (mx == r) {
    h = std::fmod((g - b) / d, 6.0) / 6.0;
  } else if (mx == g) {
    h = ((b - r) / d + 2.0) / 6.0;
  } else {
    h = ((r - g) / d + 4.0) / 6.0;
  }
  if (h < 0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  const double hh = std::fmod(h, 1.0) * 6.0;
  const int i = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

void add_hue(Tensor<double>& image, double delta) {
  if (delta == 0) return;
  for (Eigen::Index p = 0; p < image.pixels(); ++p) {
    double h, s, v, r, g, b;
    rgb_to_hsv(image.data(0, p), image.data(1, p), image.data(2, p), h, s, v);
    h += delta;
    if (h < 0) h += 1.0;
    hsv_to_rgb(h, s, v, r, g, b);
    image.data(0, p) = clamp01(r);
    image.data(1, p) = clamp01(g);
    image.data(2, p) = clamp01(b);
  }
}

void scale_brightness(Tensor<double>& image, double factor) {
  if (factor == 1.0) return;
  image.data = (image.data.array() * factor).cwiseMin(1.0).cwiseMax(0.0);
}

Image<double> cut_depth(const Image<double>& image, const Arr<double>& gt_depth, double p,
                        double alpha_max, Rng& rng) {
  Image<double> out = image;
  if (rng.uniform() >= p) return out;
  const int h = image.data.h, w = image.data.w;
  const int rect_w = std::max(1, static_cast<int>(std::lround(rng.uniform(0.0, alpha_max) * w)));
  const int rect_h = std::max(1, static_cast<int>(std::lround(rng.uniform(0.0, alpha_max) * h)));
  const int x0 = rng.uniform_int(0, w - rect_w);
  const int y0 = rng.uniform_int(0, h - rect_h);

  double lo = gt_depth(y0, x0), hi = lo;
  for (int y = y0; y < y0 + rect_h; ++y)
    for (int x = x0; x < x0 + rect_w; ++x) {
      lo = std::min(lo, gt_depth(y, x));
      hi = std::max(hi, gt_depth(y, x));
    }
  const double range = hi - lo;
  for (int y = y0; y < y0 + rect_h; ++y)
    for (int x = x0; x < x0 + rect_w; ++x) {
      // 0/0 convention: a constant-depth rectangle renders to zeros.
      const double v = range > 0 ? (gt_depth(y, x) - lo) / range : 0.0;
      for (int c = 0; c < 3; ++c) out.data.at(c, y, x) = v;
    }
  return out;
}

DepthSample augment(const DepthSample& sample, uint64_t rng_seed, const AugmentPolicy& policy) {
  DepthSample out = sample;
  if (policy.is_identity()) return out;
  Rng rng(derive_seed(rng_seed, sample.id));

  // Draw order is fixed so a single seed pins the whole transform.
  if (rng.uniform() < policy.flip_prob) {
    hflip(out.image.data);
    if (out.gt_depth) hflip(*out.gt_depth);
    hflip(out.mask);
  }
  if (policy.hue_max > 0) add_hue(out.image.data, rng.uniform(-policy.hue_max, policy.hue_max));
  if (policy.brightness_max > 0)
    scale_brightness(out.image.data,
                     rng.uniform(1.0 - policy.brightness_max, 1.0 + policy.brightness_max));
  if (policy.cutdepth_p > 0 && out.gt_depth)
    out.image = cut_depth(out.image, *out.gt_depth, policy.cutdepth_p, policy.cutdepth_alpha_max,
                          rng);
  return out;
}

}  // namespace depthkit
