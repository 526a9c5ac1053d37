// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "depthkit/pipeline.hpp"

namespace depthkit {

namespace {

ChwShape shape_of(const Tensor<double>& t) { return {t.channels(), t.h, t.w}; }

}  // namespace

void verify_trace(const PipelineTrace& trace, const DepthModel& model, int height, int width) {
  const auto& cfg = model.config();
  auto expect = [](const ChwShape& got, const ChwShape& want, const char* stage) {
    if (!(got == want))
      throw ContractError(std::string("pipeline trace: ") + stage + " produced [" +
                          std::to_string(got.c) + "," + std::to_string(got.h) + "," +
                          std::to_string(got.w) + "], expected [" + std::to_string(want.c) + "," +
                          std::to_string(want.h) + "," + std::to_string(want.w) + "]");
  };
  expect(trace.latent, {static_cast<int>(cfg.latent_channels), height / 8, width / 8}, "encode");
  if (trace.context_tokens < 1) throw ContractError("pipeline trace: empty context");
  expect(trace.aggregated, aggregate_output_shape(static_cast<int>(cfg.e), height, width),
         "aggregate");
  expect(trace.decoded, decode_output_shape(static_cast<int>(cfg.e), height, width), "decode");
  expect(trace.depth, {1, height, width}, "regress");
}

Arr<double> Pipeline::run(const DepthSample& sample, bool cache, PipelineTrace* trace) {
  const int t = static_cast<int>(model_.config().extract_t);

  Latent<double> z0 = model_.encoder().encode(sample.image, cache);
  ContextEmbedding<double> ctx = model_.condition(sample, cache);
  // Deterministic near-noiseless pass: eps = 0 scales the latent by
  // sqrt(alpha_bar_t) without adding noise.
  Tensor<double> eps(z0.data.channels(), z0.data.h, z0.data.w);
  Latent<double> zt = q_sample(z0, t, eps, model_.schedule());
  std::vector<Tensor<double>> pyramid = extract_features(zt, t, ctx, model_.denoiser(), cache);
  AggregatedFeatures<double> agg =
      model_.aggregator().forward(pyramid, z0.source_h, z0.source_w, cache);
  Tensor<double> feat = decode(agg, model_.decoder_config(), model_.decoder(), cache);
  Tensor<double> depth = model_.regressor().forward(feat, cache);

  if (trace) {
    trace->latent = shape_of(z0.data);
    trace->context_tokens = ctx.token_count();
    for (const auto& lvl : pyramid) trace->pyramid.push_back(shape_of(lvl));
    trace->aggregated = shape_of(agg.data);
    trace->decoded = shape_of(feat);
    trace->depth = shape_of(depth);
  }
  return to_plane(depth);
}

PredictionResult Pipeline::predict(const DepthSample& sample) {
  PredictionResult result;
  result.depth = run(sample, /*cache=*/false, &result.trace);
  return result;
}

Arr<double> Pipeline::forward_cached(const DepthSample& sample) {
  return run(sample, /*cache=*/true, nullptr);
}

void Pipeline::backward(const Arr<double>& grad_depth) {
  Tensor<double> g_feat = model_.regressor().backward(from_plane(grad_depth));
  Tensor<double> g_agg = model_.decoder().backward(g_feat);
  std::vector<Tensor<double>> g_pyramid = model_.aggregator().backward(g_agg);
  auto [g_zt, g_ctx] = model_.denoiser().backward(g_pyramid);
  model_.condition_backward(g_ctx);
  if (model_.backbone_trainable()) {
    // d z_t / d z_0 = sqrt(alpha_bar_t)
    const int t = static_cast<int>(model_.config().extract_t);
    g_zt.data *= std::sqrt(model_.schedule().alpha_bar(t));
    model_.encoder().backward(g_zt);
  }
}

}  // namespace depthkit
