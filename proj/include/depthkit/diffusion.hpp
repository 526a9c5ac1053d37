// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Forward-process noise schedule, single-pass feature extraction from a
// conditional denoising UNet, and multi-scale feature aggregation. No reverse
// chain is ever run; the denoiser is used purely as a feature extractor.
#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "depthkit/context.hpp"
#include "depthkit/nn/attention.hpp"
#include "depthkit/nn/layers.hpp"
#include "depthkit/tensor.hpp"

namespace depthkit {

// ---------------------------------------------------------------------------
// Noise schedule
// ---------------------------------------------------------------------------

enum class ScheduleKind { kLinear, kScaledLinear };

/// Per-step noising rates beta_t and their cumulative products
/// alpha_bar_t = prod_{s<=t} (1 - beta_s).
struct NoiseSchedule {
  std::vector<double> betas;
  std::vector<double> alpha_bars;

  int steps() const { return static_cast<int>(betas.size()); }

  double alpha_bar(int t) const {
    if (t < 0 || t >= steps())
      throw ContractError("NoiseSchedule: timestep " + std::to_string(t) + " outside [0, " +
                          std::to_string(steps()) + ")");
    return alpha_bars[static_cast<size_t>(t)];
  }
};

/// `linear` interpolates beta between the endpoints; `scaled_linear`
/// interpolates sqrt(beta). A single step uses beta_start.
inline NoiseSchedule make_noise_schedule(int T, double beta_start, double beta_end,
                                         ScheduleKind kind) {
  if (T <= 0) throw ConfigError("make_noise_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw ConfigError("make_noise_schedule: need 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.betas.resize(static_cast<size_t>(T));
  for (int i = 0; i < T; ++i) {
    const double f = T == 1 ? 0.0 : static_cast<double>(i) / (T - 1);
    if (kind == ScheduleKind::kLinear) {
      s.betas[static_cast<size_t>(i)] = beta_start + f * (beta_end - beta_start);
    } else {
      const double r = std::sqrt(beta_start) + f * (std::sqrt(beta_end) - std::sqrt(beta_start));
      s.betas[static_cast<size_t>(i)] = r * r;
    }
  }
  s.alpha_bars.resize(static_cast<size_t>(T));
  double prod = 1.0;
  for (int i = 0; i < T; ++i) {
    prod *= 1.0 - s.betas[static_cast<size_t>(i)];
    s.alpha_bars[static_cast<size_t>(i)] = prod;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Latents and forward noising
// ---------------------------------------------------------------------------

/// Latent-space tensor at 1/8 of the source image resolution.
template <typename Scalar>
struct Latent {
  Tensor<Scalar> data;
  int source_h = 0;
  int source_w = 0;
};

/// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps. Affine in both
/// inputs; shape-preserving.
template <typename Scalar>
Latent<Scalar> q_sample(const Latent<Scalar>& z0, int t, const Tensor<Scalar>& eps,
                        const NoiseSchedule& sched) {
  require_same_shape(z0.data, eps, "q_sample");
  const double ab = sched.alpha_bar(t);
  Latent<Scalar> zt = z0;
  zt.data.data = static_cast<Scalar>(std::sqrt(ab)) * z0.data.data +
                 static_cast<Scalar>(std::sqrt(1.0 - ab)) * eps.data;
  return zt;
}

// ---------------------------------------------------------------------------
// Denoiser contract
// ---------------------------------------------------------------------------

struct ChwShape {
  int c = 0, h = 0, w = 0;
  bool operator==(const ChwShape&) const = default;
};

/// Conditional denoiser used as a one-pass feature extractor. Forward returns
/// decoder-side activations ordered from the highest resolution down;
/// backward takes per-level gradients and returns (grad_z, grad_ctx).
/// Output shapes are a pure function of input shape and configuration.
template <typename Scalar>
class Denoiser : public nn::Module<Scalar> {
 public:
  virtual std::vector<Tensor<Scalar>> forward(const Tensor<Scalar>& z, int t,
                                              const Mat<Scalar>& ctx, bool cache = true) = 0;
  virtual std::pair<Tensor<Scalar>, Mat<Scalar>> backward(
      const std::vector<Tensor<Scalar>>& grad_levels) = 0;
  virtual int context_dim() const = 0;
  virtual std::vector<ChwShape> level_shapes(int latent_h, int latent_w) const = 0;
};

namespace detail {

inline constexpr int kTimeEmbedDim = 32;

template <typename Scalar>
Mat<Scalar> sinusoidal_time_embedding(int t, int dim = kTimeEmbedDim) {
  Mat<Scalar> emb(dim, 1);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    emb(i, 0) = static_cast<Scalar>(std::sin(t * freq));
    emb(half + i, 0) = static_cast<Scalar>(std::cos(t * freq));
  }
  return emb;
}

/// Residual block (norm-act-conv x2 with a timestep bias) followed by
/// cross-attention on the context tokens.
template <typename Scalar>
class ResAttnBlock : public nn::Module<Scalar> {
 public:
  ResAttnBlock(const std::string& name, int channels, int ctx_dim, Rng& rng)
      : gn1_(name + ".gn1", channels),
        conv1_(name + ".conv1", channels, channels, 3, 1, 1, rng),
        time_(name + ".time", kTimeEmbedDim, channels, rng),
        gn2_(name + ".gn2", channels),
        conv2_(name + ".conv2", channels, channels, 3, 1, 1, rng),
        attn_(name + ".attn", channels, ctx_dim, rng) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x, const Mat<Scalar>& t_emb,
                         const Mat<Scalar>& ctx, bool cache = true) {
    Tensor<Scalar> h = conv1_.forward(act1_.forward(gn1_.forward(x, cache), cache), cache);
    h.data.colwise() += time_.forward(t_emb, cache).col(0);
    h = conv2_.forward(act2_.forward(gn2_.forward(h, cache), cache), cache);
    h.data += x.data;  // residual
    return attn_.forward(h, ctx, cache);
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out, Mat<Scalar>& grad_ctx) {
    Tensor<Scalar> gr = attn_.backward(grad_out, grad_ctx);
    Tensor<Scalar> gh = gn2_.backward(act2_.backward(conv2_.backward(gr)));
    Mat<Scalar> g_time(gh.channels(), 1);
    g_time.col(0) = gh.data.rowwise().sum();
    time_.backward(g_time);  // grad wrt t_emb itself is not propagated
    Tensor<Scalar> gx = gn1_.backward(act1_.backward(conv1_.backward(gh)));
    gx.data += gr.data;  // residual
    return gx;
  }

  void collect_params(std::vector<nn::Parameter<Scalar>*>& out) override {
    gn1_.collect_params(out);
    conv1_.collect_params(out);
    time_.collect_params(out);
    gn2_.collect_params(out);
    conv2_.collect_params(out);
    attn_.collect_params(out);
  }

 private:
  nn::GroupNorm<Scalar> gn1_;
  nn::ActCache<Scalar> act1_{nn::Activation::kSiLU};
  nn::Conv2d<Scalar> conv1_;
  nn::Linear<Scalar> time_;
  nn::GroupNorm<Scalar> gn2_;
  nn::ActCache<Scalar> act2_{nn::Activation::kSiLU};
  nn::Conv2d<Scalar> conv2_;
  nn::CrossAttention<Scalar> attn_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Toy conditional UNet
// ---------------------------------------------------------------------------

struct ToyUNetConfig {
  int latent_channels = 4;
  int e = 8;       // base width; level widths are e, 2e, 4e
  int levels = 3;  // downsampling stages (2 or 3)
  int ctx_dim = kContextWidth;
};

/// Smallest architecture exercising the full denoiser contract: a UNet over
/// the latent whose decoder blocks (at latent/2 .. latent/2^levels) form the
/// feature pyramid. Cross-attention on the context runs at every level.
template <typename Scalar>
class ToyUNet final : public Denoiser<Scalar> {
 public:
  ToyUNet(const ToyUNetConfig& cfg, Rng& rng, const std::string& name = "denoiser") : cfg_(cfg) {
    if (cfg.levels < 2 || cfg.levels > 3)
      throw ConfigError("ToyUNet: levels must be 2 or 3, got " + std::to_string(cfg.levels));
    stem_ = std::make_unique<nn::Conv2d<Scalar>>(name + ".stem", cfg.latent_channels, cfg.e, 3, 1,
                                                 1, rng);
    int prev = cfg.e;
    for (int i = 0; i < cfg.levels; ++i) {
      const int w = width(i);
      downs_.push_back(std::make_unique<nn::Conv2d<Scalar>>(
          name + ".down" + std::to_string(i), prev, w, 3, 2, 1, rng));
      enc_blocks_.push_back(std::make_unique<detail::ResAttnBlock<Scalar>>(
          name + ".enc" + std::to_string(i), w, cfg.ctx_dim, rng));
      prev = w;
    }
    for (int i = 0; i < cfg.levels; ++i) {
      dec_blocks_.push_back(std::make_unique<detail::ResAttnBlock<Scalar>>(
          name + ".dec" + std::to_string(i), width(i), cfg.ctx_dim, rng));
    }
    for (int i = 0; i + 1 < cfg.levels; ++i) {
      ups_.push_back(std::make_unique<nn::ConvTranspose2d<Scalar>>(
          name + ".up" + std::to_string(i), width(i + 1), width(i), rng));
      fuses_.push_back(std::make_unique<nn::Conv2d<Scalar>>(name + ".fuse" + std::to_string(i),
                                                            2 * width(i), width(i), 3, 1, 1, rng));
    }
  }

  int width(int level) const { return cfg_.e << level; }
  const ToyUNetConfig& config() const { return cfg_; }
  int context_dim() const override { return cfg_.ctx_dim; }

  std::vector<ChwShape> level_shapes(int latent_h, int latent_w) const override {
    std::vector<ChwShape> out;
    for (int i = 0; i < cfg_.levels; ++i)
      out.push_back({width(i), latent_h >> (i + 1), latent_w >> (i + 1)});
    return out;
  }

  std::vector<Tensor<Scalar>> forward(const Tensor<Scalar>& z, int t, const Mat<Scalar>& ctx,
                                      bool cache = true) override {
    if (ctx.rows() != cfg_.ctx_dim)
      throw ContractError("ToyUNet: context width " + std::to_string(ctx.rows()) +
                          " does not match configured " + std::to_string(cfg_.ctx_dim));
    if ((z.h >> cfg_.levels) == 0 || (z.w >> cfg_.levels) == 0)
      throw ContractError("ToyUNet: latent " + z.shape_str() + " too small for " +
                          std::to_string(cfg_.levels) + " levels");
    const Mat<Scalar> t_emb = detail::sinusoidal_time_embedding<Scalar>(t);
    if (cache) ctx_tokens_ = static_cast<int>(ctx.cols());
    Tensor<Scalar> h = stem_->forward(z, cache);
    std::vector<Tensor<Scalar>> skips;
    for (int i = 0; i < cfg_.levels; ++i) {
      h = downs_[i]->forward(h, cache);
      h = enc_blocks_[i]->forward(h, t_emb, ctx, cache);
      skips.push_back(h);
    }
    std::vector<Tensor<Scalar>> pyramid(static_cast<size_t>(cfg_.levels));
    pyramid[cfg_.levels - 1] = dec_blocks_[cfg_.levels - 1]->forward(h, t_emb, ctx, cache);
    for (int i = cfg_.levels - 2; i >= 0; --i) {
      Tensor<Scalar> u = ups_[i]->forward(pyramid[i + 1], cache);
      Tensor<Scalar> f =
          fuses_[i]->forward(concat_channels<Scalar>({std::move(u), skips[i]}), cache);
      pyramid[i] = dec_blocks_[i]->forward(f, t_emb, ctx, cache);
    }
    return pyramid;
  }

  std::pair<Tensor<Scalar>, Mat<Scalar>> backward(
      const std::vector<Tensor<Scalar>>& grad_levels) override {
    if (static_cast<int>(grad_levels.size()) != cfg_.levels)
      throw ContractError("ToyUNet::backward: expected " + std::to_string(cfg_.levels) +
                          " level gradients");
    Mat<Scalar> grad_ctx = Mat<Scalar>::Zero(cfg_.ctx_dim, ctx_tokens_);
    std::vector<Tensor<Scalar>> skip_grads(static_cast<size_t>(cfg_.levels));
    Tensor<Scalar> g_deep;  // gradient flowing into the next-deeper pyramid level
    for (int i = 0; i < cfg_.levels - 1; ++i) {
      Tensor<Scalar> g = grad_levels[i];
      if (i > 0) g.data += g_deep.data;
      Tensor<Scalar> gf = dec_blocks_[i]->backward(g, grad_ctx);
      auto parts = split_channels(fuses_[i]->backward(gf), {width(i), width(i)});
      skip_grads[i] = std::move(parts[1]);
      g_deep = ups_[i]->backward(parts[0]);
    }
    Tensor<Scalar> g_mid = grad_levels[cfg_.levels - 1];
    if (cfg_.levels > 1) g_mid.data += g_deep.data;
    Tensor<Scalar> gh = dec_blocks_[cfg_.levels - 1]->backward(g_mid, grad_ctx);
    for (int i = cfg_.levels - 1; i >= 0; --i) {
      if (i < cfg_.levels - 1) gh.data += skip_grads[i].data;
      gh = enc_blocks_[i]->backward(gh, grad_ctx);
      gh = downs_[i]->backward(gh);
    }
    return {stem_->backward(gh), std::move(grad_ctx)};
  }

  void collect_params(std::vector<nn::Parameter<Scalar>*>& out) override {
    stem_->collect_params(out);
    for (auto& m : downs_) m->collect_params(out);
    for (auto& m : enc_blocks_) m->collect_params(out);
    for (auto& m : dec_blocks_) m->collect_params(out);
    for (auto& m : ups_) m->collect_params(out);
    for (auto& m : fuses_) m->collect_params(out);
  }

 private:
  ToyUNetConfig cfg_;
  int ctx_tokens_ = 1;
  std::unique_ptr<nn::Conv2d<Scalar>> stem_;
  std::vector<std::unique_ptr<nn::Conv2d<Scalar>>> downs_;
  std::vector<std::unique_ptr<detail::ResAttnBlock<Scalar>>> enc_blocks_;
  std::vector<std::unique_ptr<detail::ResAttnBlock<Scalar>>> dec_blocks_;
  std::vector<std::unique_ptr<nn::ConvTranspose2d<Scalar>>> ups_;
  std::vector<std::unique_ptr<nn::Conv2d<Scalar>>> fuses_;
};

// ---------------------------------------------------------------------------
// Feature extraction and aggregation
// ---------------------------------------------------------------------------

/// One denoising pass; no sampling loop. The context must match the width the
/// denoiser was built with.
template <typename Scalar>
std::vector<Tensor<Scalar>> extract_features(const Latent<Scalar>& z_t, int t,
                                             const ContextEmbedding<Scalar>& ctx,
                                             Denoiser<Scalar>& denoiser, bool cache = true) {
  if (ctx.tokens.rows() != denoiser.context_dim())
    throw ContractError("extract_features: conditioning width mismatch");
  return denoiser.forward(z_t.data, t, ctx.tokens, cache);
}

/// Fused multi-scale features: exactly 8e channels at (H/32, W/32).
template <typename Scalar>
struct AggregatedFeatures {
  Tensor<Scalar> data;
  int e = 0;
  int source_h = 0;
  int source_w = 0;
};

inline ChwShape aggregate_output_shape(int e, int source_h, int source_w) {
  return {8 * e, source_h / 32, source_w / 32};
}

/// Bilinear-resizes every pyramid level to (H/32, W/32), concatenates along
/// channels, and projects with a learnable 1x1 convolution to 8e channels.
template <typename Scalar>
class FeatureAggregator : public nn::Module<Scalar> {
 public:
  FeatureAggregator(const std::string& name, std::vector<int> level_channels, int e, Rng& rng)
      : e_(e), level_channels_(std::move(level_channels)) {
    int total = 0;
    for (int c : level_channels_) total += c;
    if (total <= 0) throw ConfigError("FeatureAggregator: no input channels");
    proj_ = std::make_unique<nn::Conv2d<Scalar>>(name + ".proj", total, 8 * e, 1, 1, 0, rng);
  }

  int e() const { return e_; }

  AggregatedFeatures<Scalar> forward(const std::vector<Tensor<Scalar>>& pyramid, int source_h,
                                     int source_w, bool cache = true) {
    if (pyramid.empty()) throw ContractError("aggregate_features: empty pyramid");
    if (source_h % 32 != 0 || source_w % 32 != 0)
      throw ContractError("aggregate_features: source dims must be divisible by 32");
    const int th = source_h / 32, tw = source_w / 32;
    std::vector<Tensor<Scalar>> resized;
    std::vector<std::pair<int, int>> in_dims;
    for (size_t i = 0; i < pyramid.size(); ++i) {
      const auto& lvl = pyramid[i];
      if (lvl.channels() != level_channels_[i])
        throw ContractError("aggregate_features: level " + std::to_string(i) + " has " +
                            std::to_string(lvl.channels()) + " channels, expected " +
                            std::to_string(level_channels_[i]));
      const bool integer_factor = (lvl.h % th == 0 && lvl.w % tw == 0) ||
                                  (th % lvl.h == 0 && tw % lvl.w == 0);
      if (!integer_factor)
        throw ContractError("aggregate_features: level " + lvl.shape_str() +
                            " not an integer factor of target " + std::to_string(th) + "x" +
                            std::to_string(tw));
      in_dims.emplace_back(lvl.h, lvl.w);
      resized.push_back(resize_bilinear(lvl, th, tw));
    }
    if (cache) in_dims_ = std::move(in_dims);
    AggregatedFeatures<Scalar> out;
    out.data = proj_->forward(concat_channels(resized), cache);
    out.e = e_;
    out.source_h = source_h;
    out.source_w = source_w;
    return out;
  }

  std::vector<Tensor<Scalar>> backward(const Tensor<Scalar>& grad_out) {
    Tensor<Scalar> gcat = proj_->backward(grad_out);
    auto parts = split_channels(gcat, level_channels_);
    std::vector<Tensor<Scalar>> grads;
    for (size_t i = 0; i < parts.size(); ++i)
      grads.push_back(resize_bilinear_backward(parts[i], in_dims_[i].first, in_dims_[i].second));
    return grads;
  }

  void collect_params(std::vector<nn::Parameter<Scalar>*>& out) override {
    proj_->collect_params(out);
  }

  nn::Conv2d<Scalar>& projection() { return *proj_; }

 private:
  int e_;
  std::vector<int> level_channels_;
  std::unique_ptr<nn::Conv2d<Scalar>> proj_;
  std::vector<std::pair<int, int>> in_dims_;
};

}  // namespace depthkit
