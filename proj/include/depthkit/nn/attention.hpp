// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "depthkit/nn/functional.hpp"
#include "depthkit/nn/module.hpp"

namespace depthkit::nn {

/// Single-head cross-attention with a residual connection. Queries come from
/// the spatial positions of the feature map, keys/values from the context
/// tokens; output is x + Wo(attention).
template <typename Scalar>
class CrossAttention : public Module<Scalar> {
 public:
  CrossAttention(std::string name, int channels, int ctx_dim, Rng& rng)
      : channels_(channels),
        wq_(name + ".wq", channels, channels),
        wk_(name + ".wk", channels, ctx_dim),
        wv_(name + ".wv", channels, ctx_dim),
        wo_(name + ".wo", channels, channels) {
    wq_.init_kaiming(rng, channels);
    wk_.init_kaiming(rng, ctx_dim);
    wv_.init_kaiming(rng, ctx_dim);
    wo_.init_kaiming(rng, channels);
  }

  /// ctx is [ctx_dim x tokens].
  Tensor<Scalar> forward(const Tensor<Scalar>& x, const Mat<Scalar>& ctx, bool cache = true) {
    if (ctx.rows() != wk_.value.cols())
      throw ContractError(wk_.name + ": context width " + std::to_string(ctx.rows()) +
                          " does not match " + std::to_string(wk_.value.cols()));
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(channels_));
    Mat<Scalar> q = wq_.value * x.data;
    Mat<Scalar> k = wk_.value * ctx;
    Mat<Scalar> v = wv_.value * ctx;
    Mat<Scalar> att = softmax_columns<Scalar>((k.transpose() * q) * scale);  // [S x P]
    Mat<Scalar> out = v * att;
    Tensor<Scalar> y = x;
    y.data.noalias() += wo_.value * out;
    if (cache) {
      x_ = x;
      ctx_ = ctx;
      q_ = std::move(q);
      k_ = std::move(k);
      v_ = std::move(v);
      att_ = std::move(att);
      out_ = std::move(out);
    }
    return y;
  }

  /// Returns grad wrt x; grad wrt ctx is accumulated into grad_ctx.
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out, Mat<Scalar>& grad_ctx) {
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(channels_));
    wo_.grad.noalias() += grad_out.data * out_.transpose();
    Mat<Scalar> g_out = wo_.value.transpose() * grad_out.data;
    Mat<Scalar> g_v = g_out * att_.transpose();
    Mat<Scalar> g_att = v_.transpose() * g_out;
    Mat<Scalar> g_scores = softmax_columns_backward(att_, g_att);
    Mat<Scalar> g_q = (k_ * g_scores) * scale;
    Mat<Scalar> g_k = (q_ * g_scores.transpose()) * scale;
    wq_.grad.noalias() += g_q * x_.data.transpose();
    wk_.grad.noalias() += g_k * ctx_.transpose();
    wv_.grad.noalias() += g_v * ctx_.transpose();
    grad_ctx.noalias() += wk_.value.transpose() * g_k + wv_.value.transpose() * g_v;
    Tensor<Scalar> gx = grad_out;
    gx.data.noalias() += wq_.value.transpose() * g_q;
    return gx;
  }

  void collect_params(std::vector<Parameter<Scalar>*>& out) override {
    out.push_back(&wq_);
    out.push_back(&wk_);
    out.push_back(&wv_);
    out.push_back(&wo_);
  }

 private:
  int channels_;
  Parameter<Scalar> wq_, wk_, wv_, wo_;
  Tensor<Scalar> x_;
  Mat<Scalar> ctx_, q_, k_, v_, att_, out_;
};

}  // namespace depthkit::nn
