// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Upsampling decoder from the aggregated feature map back to full resolution,
// and the two-conv regressor mapping features to bounded metric depth.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "depthkit/diffusion.hpp"
#include "depthkit/nn/layers.hpp"

namespace depthkit {

struct DecoderConfig {
  int e = 192;
  int stages = 5;      // x2 transposed-conv stages; 2^stages * (H/32) must equal H
  double d_max = 10.0; // meters
  nn::Activation act = nn::Activation::kGELU;
};

/// Channel plan across the decoder: 8e -> 4e -> 2e -> e, then constant e.
inline std::vector<int> decoder_channel_plan(int e, int stages) {
  std::vector<int> plan{8 * e};
  for (int i = 0; i < stages; ++i) plan.push_back(std::max(e, plan.back() / 2));
  return plan;
}

inline ChwShape decode_output_shape(int e, int source_h, int source_w) {
  return {e, source_h, source_w};
}

/// Stack of (transposed conv, group norm, activation) stages, each doubling
/// the spatial resolution.
template <typename Scalar>
class UpsamplingDecoder : public nn::Module<Scalar> {
 public:
  UpsamplingDecoder(const std::string& name, int e, int stages, nn::Activation act, Rng& rng) {
    const auto plan = decoder_channel_plan(e, stages);
    for (int i = 0; i < stages; ++i) {
      ups_.push_back(std::make_unique<nn::ConvTranspose2d<Scalar>>(
          name + ".up" + std::to_string(i), plan[i], plan[i + 1], rng));
      norms_.push_back(
          std::make_unique<nn::GroupNorm<Scalar>>(name + ".gn" + std::to_string(i), plan[i + 1]));
      acts_.emplace_back(act);
    }
    out_channels_ = plan.back();
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool cache = true) {
    Tensor<Scalar> h = x;
    for (size_t i = 0; i < ups_.size(); ++i)
      h = acts_[i].forward(norms_[i]->forward(ups_[i]->forward(h, cache), cache), cache);
    return h;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) {
    Tensor<Scalar> g = grad_out;
    for (size_t i = ups_.size(); i-- > 0;)
      g = ups_[i]->backward(norms_[i]->backward(acts_[i].backward(g)));
    return g;
  }

  int stages() const { return static_cast<int>(ups_.size()); }
  int out_channels() const { return out_channels_; }

  void collect_params(std::vector<nn::Parameter<Scalar>*>& out) override {
    for (size_t i = 0; i < ups_.size(); ++i) {
      ups_[i]->collect_params(out);
      norms_[i]->collect_params(out);
    }
  }

 private:
  std::vector<std::unique_ptr<nn::ConvTranspose2d<Scalar>>> ups_;
  std::vector<std::unique_ptr<nn::GroupNorm<Scalar>>> norms_;
  std::vector<nn::ActCache<Scalar>> acts_;
  int out_channels_ = 0;
};

/// Runs the decoder with the config-level contract checks: input must sit at
/// (H/32, W/32) with exactly 8e channels, and 2^stages must restore H.
template <typename Scalar>
Tensor<Scalar> decode(const AggregatedFeatures<Scalar>& f, const DecoderConfig& cfg,
                      UpsamplingDecoder<Scalar>& dec, bool cache = true) {
  if (f.data.channels() != 8 * cfg.e)
    throw ContractError("decode: expected " + std::to_string(8 * cfg.e) + " channels, got " +
                        std::to_string(f.data.channels()));
  if (f.data.h * 32 != f.source_h || f.data.w * 32 != f.source_w)
    throw ContractError("decode: features " + f.data.shape_str() + " are not at 1/32 of " +
                        std::to_string(f.source_h) + "x" + std::to_string(f.source_w));
  if ((f.data.h << cfg.stages) != f.source_h || (f.data.w << cfg.stages) != f.source_w)
    throw ContractError("decode: 2^stages * (H/32) != H for stages=" +
                        std::to_string(cfg.stages));
  if (dec.stages() != cfg.stages)
    throw ContractError("decode: decoder built with " + std::to_string(dec.stages()) +
                        " stages, config says " + std::to_string(cfg.stages));
  return dec.forward(f.data, cache);
}

/// Two 3x3 convolutions and a scaled sigmoid: y = d_max * sigmoid(conv2(act(conv1(x)))).
/// Outputs are strictly inside (0, d_max) for any finite input.
template <typename Scalar>
class DepthRegressor : public nn::Module<Scalar> {
 public:
  DepthRegressor(const std::string& name, int in_channels, int e, double d_max,
                 nn::Activation act, Rng& rng)
      : d_max_(static_cast<Scalar>(d_max)),
        conv1_(name + ".conv1", in_channels, e, 3, 1, 1, rng),
        act_(act),
        conv2_(name + ".conv2", e, 1, 3, 1, 1, rng) {
    if (d_max <= 0) throw ConfigError("DepthRegressor: d_max must be positive");
  }

  /// Pre-sigmoid logits, one channel.
  Tensor<Scalar> forward_logits(const Tensor<Scalar>& feat, bool cache = true) {
    return conv2_.forward(act_.forward(conv1_.forward(feat, cache), cache), cache);
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& feat, bool cache = true) {
    Tensor<Scalar> y = forward_logits(feat, cache);
    // Clamp away from the endpoints so the open-interval contract holds even
    // where the sigmoid saturates to 1.0 in floating point. Written so NaN
    // passes through instead of being laundered into a valid value.
    y.data = y.data.unaryExpr([this](Scalar v) {
      Scalar s = nn::sigmoid(v);
      if (s < kClamp) s = kClamp;
      if (s > Scalar(1) - kClamp) s = Scalar(1) - kClamp;
      return d_max_ * s;
    });
    if (cache) depth_ = y;
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_depth) {
    // dy/du for y = d_max * sigmoid(u) expressed through y itself.
    Tensor<Scalar> gu = grad_depth;
    gu.data.array() *= depth_.data.array() * (Scalar(1) - depth_.data.array() / d_max_);
    return conv1_.backward(act_.backward(conv2_.backward(gu)));
  }

  Scalar d_max() const { return d_max_; }

  void collect_params(std::vector<nn::Parameter<Scalar>*>& out) override {
    conv1_.collect_params(out);
    conv2_.collect_params(out);
  }

 private:
  static constexpr Scalar kClamp = Scalar(1e-12);
  Scalar d_max_;
  nn::Conv2d<Scalar> conv1_;
  nn::ActCache<Scalar> act_;
  nn::Conv2d<Scalar> conv2_;
  Tensor<Scalar> depth_;
};

}  // namespace depthkit
