// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// The seven standard depth metrics, validity-mask construction with
// per-dataset caps and evaluation crops, and the mean-relative-improvement
// aggregate used for zero-shot comparisons.
#pragma once

#include <cmath>
#include <string>

#include "depthkit/errors.hpp"
#include "depthkit/tensor.hpp"

namespace depthkit {

struct MetricReport {
  double abs_rel = 0;
  double sq_rel = 0;
  double rmse = 0;
  double rmse_log = 0;
  double log10 = 0;
  double delta1 = 0;
  double delta2 = 0;
  double delta3 = 0;
  long n_pixels = 0;
};

inline void validate_report(const MetricReport& r) {
  const bool ok = r.delta1 <= r.delta2 + 1e-15 && r.delta2 <= r.delta3 + 1e-15 &&
                  r.delta1 >= 0 && r.delta3 <= 1.0 + 1e-15 && r.abs_rel >= 0 && r.sq_rel >= 0 &&
                  r.rmse >= 0 && r.rmse_log >= 0 && r.log10 >= 0;
  if (!ok) throw ContractError("MetricReport: invariants violated");
}

/// Per-pixel depth metrics over the masked region. Delta thresholds use a
/// strict '<': a ratio exactly equal to 1.25^i counts as a failure.
template <typename Scalar>
MetricReport compute_metrics(const Arr<Scalar>& pred, const Arr<Scalar>& gt,
                             const MaskArray& mask) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols() || mask.rows() != pred.rows() ||
      mask.cols() != pred.cols())
    throw ContractError("compute_metrics: shape mismatch");
  if (!mask.any()) throw DataError("compute_metrics: empty validity mask");

  const double t1 = 1.25, t2 = 1.25 * 1.25, t3 = 1.25 * 1.25 * 1.25;
  double abs_rel = 0, sq_rel = 0, se = 0, se_log = 0, l10 = 0;
  long n = 0, d1 = 0, d2 = 0, d3 = 0;
  for (Eigen::Index y = 0; y < pred.rows(); ++y)
    for (Eigen::Index x = 0; x < pred.cols(); ++x) {
      if (!mask(y, x)) continue;
      const double p = static_cast<double>(pred(y, x));
      const double g = static_cast<double>(gt(y, x));
      if (!(p > 0) || !(g > 0)) throw DataError("compute_metrics: nonpositive masked depth");
      const double diff = p - g;
      abs_rel += std::abs(diff) / g;
      sq_rel += diff * diff / g;
      se += diff * diff;
      const double dl = std::log(p) - std::log(g);
      se_log += dl * dl;
      l10 += std::abs(std::log10(p) - std::log10(g));
      const double ratio = std::max(p / g, g / p);
      if (ratio < t1) ++d1;
      if (ratio < t2) ++d2;
      if (ratio < t3) ++d3;
      ++n;
    }
  MetricReport r;
  r.n_pixels = n;
  r.abs_rel = abs_rel / n;
  r.sq_rel = sq_rel / n;
  r.rmse = std::sqrt(se / n);
  r.rmse_log = std::sqrt(se_log / n);
  r.log10 = l10 / n;
  r.delta1 = static_cast<double>(d1) / n;
  r.delta2 = static_cast<double>(d2) / n;
  r.delta3 = static_cast<double>(d3) / n;
  validate_report(r);
  return r;
}

enum class EvalCrop { kNone, kEigen, kGarg };

inline EvalCrop eval_crop_from_string(const std::string& s) {
  if (s == "none") return EvalCrop::kNone;
  if (s == "eigen") return EvalCrop::kEigen;
  if (s == "garg") return EvalCrop::kGarg;
  throw ConfigError("unknown crop '" + s + "' (expected none|eigen|garg)");
}

inline std::string to_string(EvalCrop c) {
  switch (c) {
    case EvalCrop::kNone: return "none";
    case EvalCrop::kEigen: return "eigen";
    case EvalCrop::kGarg: return "garg";
  }
  return "none";
}

namespace detail {

// Community-standard evaluation windows, expressed as frame fractions.
// Eigen-split window reduces to rows 45..471, cols 41..601 on 480x640;
// the Garg window is the usual KITTI evaluation crop.
inline constexpr double kEigenCrop[4] = {0.09375, 0.98125, 0.0640625, 0.9390625};
inline constexpr double kGargCrop[4] = {0.40810811, 0.99189189, 0.03594771, 0.96405229};

inline bool inside_crop(EvalCrop crop, Eigen::Index y, Eigen::Index x, Eigen::Index h,
                        Eigen::Index w) {
  if (crop == EvalCrop::kNone) return true;
  const double* f = crop == EvalCrop::kEigen ? kEigenCrop : kGargCrop;
  const auto y0 = static_cast<Eigen::Index>(f[0] * h), y1 = static_cast<Eigen::Index>(f[1] * h);
  const auto x0 = static_cast<Eigen::Index>(f[2] * w), x1 = static_cast<Eigen::Index>(f[3] * w);
  return y >= y0 && y < y1 && x >= x0 && x < x1;
}

}  // namespace detail

/// True where d_min < gt <= cap, intersected with the crop window.
template <typename Scalar>
MaskArray build_mask(const Arr<Scalar>& gt, double d_min, double cap,
                     EvalCrop crop = EvalCrop::kNone) {
  if (!(cap > d_min) || d_min < 0) throw ConfigError("build_mask: need cap > d_min >= 0");
  MaskArray mask(gt.rows(), gt.cols());
  for (Eigen::Index y = 0; y < gt.rows(); ++y)
    for (Eigen::Index x = 0; x < gt.cols(); ++x) {
      const double v = static_cast<double>(gt(y, x));
      mask(y, x) = v > d_min && v <= cap &&
                   detail::inside_crop(crop, y, x, gt.rows(), gt.cols());
    }
  return mask;
}

/// Mean over {delta1, abs_rel, rmse} of the relative improvement against a
/// baseline, with the sign flipped for lower-is-better metrics.
inline double mean_relative_improvement(const MetricReport& ours, const MetricReport& baseline) {
  if (baseline.delta1 == 0 || baseline.abs_rel == 0 || baseline.rmse == 0)
    throw DataError("mean_relative_improvement: zero baseline field");
  const double d1 = (ours.delta1 - baseline.delta1) / baseline.delta1;
  const double ar = (baseline.abs_rel - ours.abs_rel) / baseline.abs_rel;
  const double rm = (baseline.rmse - ours.rmse) / baseline.rmse;
  return (d1 + ar + rm) / 3.0;
}

}  // namespace depthkit
