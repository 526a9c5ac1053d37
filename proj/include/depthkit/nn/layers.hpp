// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "depthkit/nn/functional.hpp"
#include "depthkit/nn/module.hpp"

namespace depthkit::nn {

/// y = W x + b applied column-wise; x is [n_in x cols].
template <typename Scalar>
class Linear : public Module<Scalar> {
 public:
  Linear(std::string name, int n_in, int n_out, Rng& rng)
      : weight_(name + ".weight", n_out, n_in), bias_(name + ".bias", n_out, 1) {
    weight_.init_kaiming(rng, n_in);
  }

  Mat<Scalar> forward(const Mat<Scalar>& x, bool cache = true) {
    if (x.rows() != weight_.value.cols())
      throw ContractError(weight_.name + ": input width " + std::to_string(x.rows()) +
                          " != " + std::to_string(weight_.value.cols()));
    if (cache) in_ = x;
    return (weight_.value * x).colwise() + bias_.value.col(0);
  }

  Mat<Scalar> backward(const Mat<Scalar>& grad_out) {
    weight_.grad.noalias() += grad_out * in_.transpose();
    bias_.grad.col(0).noalias() += grad_out.rowwise().sum();
    return weight_.value.transpose() * grad_out;
  }

  void collect_params(std::vector<Parameter<Scalar>*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  Parameter<Scalar>& weight() { return weight_; }
  Parameter<Scalar>& bias() { return bias_; }
  int in_features() const { return static_cast<int>(weight_.value.cols()); }
  int out_features() const { return static_cast<int>(weight_.value.rows()); }

 private:
  Parameter<Scalar> weight_, bias_;
  Mat<Scalar> in_;
};

/// Square-kernel 2D convolution, implemented as im2col + GEMM.
/// Weight layout is [c_out x (k*k*c_in)] matching the im2col row order.
template <typename Scalar>
class Conv2d : public Module<Scalar> {
 public:
  Conv2d(std::string name, int c_in, int c_out, int k, int stride, int pad, Rng& rng)
      : c_in_(c_in),
        k_(k),
        stride_(stride),
        pad_(pad),
        weight_(name + ".weight", c_out, k * k * c_in),
        bias_(name + ".bias", c_out, 1) {
    weight_.init_kaiming(rng, static_cast<Eigen::Index>(k) * k * c_in);
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool cache = true) {
    if (x.channels() != c_in_)
      throw ContractError(weight_.name + ": expected " + std::to_string(c_in_) +
                          " input channels, got " + std::to_string(x.channels()));
    ConvGeom g(x.h, x.w, k_, stride_, pad_);
    Mat<Scalar> cols = im2col(x, g);
    Tensor<Scalar> out(out_channels(), g.out_h, g.out_w);
    out.data.noalias() = weight_.value * cols;
    out.data.colwise() += bias_.value.col(0);
    if (cache) {
      cols_ = std::move(cols);
      in_h_ = x.h;
      in_w_ = x.w;
    }
    return out;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) {
    weight_.grad.noalias() += grad_out.data * cols_.transpose();
    bias_.grad.col(0).noalias() += grad_out.data.rowwise().sum();
    ConvGeom g(in_h_, in_w_, k_, stride_, pad_);
    Mat<Scalar> gcols = weight_.value.transpose() * grad_out.data;
    return col2im(gcols, c_in_, g);
  }

  void collect_params(std::vector<Parameter<Scalar>*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  int out_channels() const { return static_cast<int>(weight_.value.rows()); }
  Parameter<Scalar>& weight() { return weight_; }
  Parameter<Scalar>& bias() { return bias_; }

 private:
  int c_in_, k_, stride_, pad_;
  Parameter<Scalar> weight_, bias_;
  Mat<Scalar> cols_;
  int in_h_ = 0, in_w_ = 0;
};

/// Transposed convolution doubling the spatial resolution
/// (k=3, stride=2, pad=1, output_padding=1). Forward is the adjoint of a
/// Conv2d from the doubled grid back down, so col2im/im2col are reused.
template <typename Scalar>
class ConvTranspose2d : public Module<Scalar> {
 public:
  ConvTranspose2d(std::string name, int c_in, int c_out, Rng& rng)
      : c_in_(c_in),
        c_out_(c_out),
        weight_(name + ".weight", c_in, kK * kK * c_out),
        bias_(name + ".bias", c_out, 1) {
    weight_.init_kaiming(rng, static_cast<Eigen::Index>(kK) * kK * c_in);
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool cache = true) {
    if (x.channels() != c_in_)
      throw ContractError(weight_.name + ": expected " + std::to_string(c_in_) +
                          " input channels, got " + std::to_string(x.channels()));
    ConvGeom g = geom(x.h, x.w);
    Mat<Scalar> cols = weight_.value.transpose() * x.data;
    Tensor<Scalar> out = col2im(cols, c_out_, g);
    out.data.colwise() += bias_.value.col(0);
    if (cache) in_ = x;
    return out;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) {
    ConvGeom g = geom(in_.h, in_.w);
    Mat<Scalar> gcols = im2col(grad_out, g);
    weight_.grad.noalias() += in_.data * gcols.transpose();
    bias_.grad.col(0).noalias() += grad_out.data.rowwise().sum();
    Tensor<Scalar> gx(c_in_, in_.h, in_.w);
    gx.data.noalias() = weight_.value * gcols;
    return gx;
  }

  void collect_params(std::vector<Parameter<Scalar>*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  int out_channels() const { return c_out_; }
  Parameter<Scalar>& weight() { return weight_; }

 private:
  static constexpr int kK = 3;
  // The doubled grid seen as the *input* of the underlying convolution.
  ConvGeom geom(int h, int w) const { return ConvGeom(2 * h, 2 * w, kK, 2, 1); }

  int c_in_, c_out_;
  Parameter<Scalar> weight_, bias_;
  Tensor<Scalar> in_;
};

/// Group normalization over (channels-per-group x spatial) statistics with a
/// per-channel affine. Batch-independent by construction.
template <typename Scalar>
class GroupNorm : public Module<Scalar> {
 public:
  GroupNorm(std::string name, int channels, int groups = 0)
      : channels_(channels),
        groups_(groups > 0 ? groups : default_groups(channels)),
        gamma_(name + ".gamma", channels, 1),
        beta_(name + ".beta", channels, 1) {
    if (channels_ % groups_ != 0)
      throw ConfigError(name + ": channels " + std::to_string(channels) +
                        " not divisible by groups " + std::to_string(groups_));
    gamma_.value.setOnes();
  }

  static int default_groups(int channels) { return channels % 8 == 0 ? 8 : 1; }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool cache = true) {
    const int gc = channels_ / groups_;
    Tensor<Scalar> xhat(channels_, x.h, x.w);
    Vec<Scalar> inv_sigma(groups_);
    for (int g = 0; g < groups_; ++g) {
      auto block = x.data.middleRows(g * gc, gc);
      const Scalar mean = block.mean();
      const Scalar var = (block.array() - mean).square().mean();
      const Scalar is = Scalar(1) / std::sqrt(var + kEps);
      xhat.data.middleRows(g * gc, gc) = (block.array() - mean) * is;
      inv_sigma(g) = is;
    }
    Tensor<Scalar> y = xhat;
    y.data.array().colwise() *= gamma_.value.col(0).array();
    y.data.colwise() += beta_.value.col(0);
    if (cache) {
      xhat_ = std::move(xhat);
      inv_sigma_ = std::move(inv_sigma);
    }
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) {
    const int gc = channels_ / groups_;
    gamma_.grad.col(0).array() +=
        (grad_out.data.array() * xhat_.data.array()).rowwise().sum();
    beta_.grad.col(0) += grad_out.data.rowwise().sum();

    Tensor<Scalar> gx(channels_, grad_out.h, grad_out.w);
    for (int g = 0; g < groups_; ++g) {
      // d/dx of (x - mu)/sigma with mu, sigma over the whole group block.
      Mat<Scalar> dxhat = grad_out.data.middleRows(g * gc, gc);
      dxhat.array().colwise() *= gamma_.value.col(0).segment(g * gc, gc).array();
      const auto xh = xhat_.data.middleRows(g * gc, gc);
      const Scalar m1 = dxhat.mean();
      const Scalar m2 = (dxhat.array() * xh.array()).mean();
      gx.data.middleRows(g * gc, gc) =
          inv_sigma_(g) * (dxhat.array() - m1 - xh.array() * m2);
    }
    return gx;
  }

  void collect_params(std::vector<Parameter<Scalar>*>& out) override {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }

 private:
  static constexpr Scalar kEps = Scalar(1e-5);
  int channels_, groups_;
  Parameter<Scalar> gamma_, beta_;
  Tensor<Scalar> xhat_;
  Vec<Scalar> inv_sigma_;
};

}  // namespace depthkit::nn
