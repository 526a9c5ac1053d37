// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// The composed prediction path:
//   encode -> condition -> forward-noise -> extract -> aggregate -> decode -> regress
// with an instrumentation trace that pins each stage's output shape.
#pragma once

#include "depthkit/losses.hpp"
#include "depthkit/model.hpp"

namespace depthkit {

struct PipelineTrace {
  ChwShape latent;                // [C_lat, H/8, W/8]
  int context_tokens = 0;         // context is [S, 768]
  std::vector<ChwShape> pyramid;  // denoiser level outputs
  ChwShape aggregated;            // [8e, H/32, W/32]
  ChwShape decoded;               // [e, H, W]
  ChwShape depth;                 // [1, H, W]
};

struct PredictionResult {
  Arr<double> depth;  // meters, (0, d_max)
  PipelineTrace trace;
};

/// Asserts every stage shape against the contracts; ContractError on any
/// deviation.
void verify_trace(const PipelineTrace& trace, const DepthModel& model, int height, int width);

/// Stateless-inference and cached-training forward passes over a model.
class Pipeline {
 public:
  explicit Pipeline(DepthModel& model) : model_(model) {}

  /// Inference: no activation caching, deterministic (eps = 0 at extract_t).
  PredictionResult predict(const DepthSample& sample);

  /// Training forward: caches everything needed by backward().
  Arr<double> forward_cached(const DepthSample& sample);

  /// Backpropagates a gradient wrt the predicted depth plane; accumulates
  /// parameter gradients across calls.
  void backward(const Arr<double>& grad_depth);

 private:
  Arr<double> run(const DepthSample& sample, bool cache, PipelineTrace* trace);

  DepthModel& model_;
};

}  // namespace depthkit
