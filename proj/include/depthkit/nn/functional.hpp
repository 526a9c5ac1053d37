// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "depthkit/tensor.hpp"

namespace depthkit::nn {

/// Sliding-window geometry of a convolution mapping an (in_h, in_w) grid to
/// an (out_h, out_w) grid with square kernel k, stride s and zero padding p.
struct ConvGeom {
  int in_h, in_w;
  int k, stride, pad;
  int out_h, out_w;

  ConvGeom(int ih, int iw, int kernel, int s, int p)
      : in_h(ih), in_w(iw), k(kernel), stride(s), pad(p) {
    out_h = (ih + 2 * p - kernel) / s + 1;
    out_w = (iw + 2 * p - kernel) / s + 1;
    if (out_h <= 0 || out_w <= 0) throw ContractError("ConvGeom: non-positive output dims");
  }
};

/// Gathers k*k patches into a (c*k*k) x (out_h*out_w) matrix. Row layout puts
/// the channel index fastest so a whole input pixel copies as one block.
template <typename Scalar>
Mat<Scalar> im2col(const Tensor<Scalar>& x, const ConvGeom& g) {
  const int c = x.channels();
  Mat<Scalar> cols = Mat<Scalar>::Zero(static_cast<Eigen::Index>(c) * g.k * g.k,
                                       static_cast<Eigen::Index>(g.out_h) * g.out_w);
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      const Eigen::Index col = static_cast<Eigen::Index>(oy) * g.out_w + ox;
      for (int ky = 0; ky < g.k; ++ky) {
        const int iy = oy * g.stride - g.pad + ky;
        if (iy < 0 || iy >= g.in_h) continue;
        for (int kx = 0; kx < g.k; ++kx) {
          const int ix = ox * g.stride - g.pad + kx;
          if (ix < 0 || ix >= g.in_w) continue;
          cols.block((static_cast<Eigen::Index>(ky) * g.k + kx) * c, col, c, 1) =
              x.data.col(static_cast<Eigen::Index>(iy) * g.in_w + ix);
        }
      }
    }
  }
  return cols;
}

/// Adjoint of im2col: scatter-adds patch columns back onto the input grid.
template <typename Scalar>
Tensor<Scalar> col2im(const Mat<Scalar>& cols, int channels, const ConvGeom& g) {
  Tensor<Scalar> x(channels, g.in_h, g.in_w);
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      const Eigen::Index col = static_cast<Eigen::Index>(oy) * g.out_w + ox;
      for (int ky = 0; ky < g.k; ++ky) {
        const int iy = oy * g.stride - g.pad + ky;
        if (iy < 0 || iy >= g.in_h) continue;
        for (int kx = 0; kx < g.k; ++kx) {
          const int ix = ox * g.stride - g.pad + kx;
          if (ix < 0 || ix >= g.in_w) continue;
          x.data.col(static_cast<Eigen::Index>(iy) * g.in_w + ix) +=
              cols.block((static_cast<Eigen::Index>(ky) * g.k + kx) * channels, col, channels, 1);
        }
      }
    }
  }
  return x;
}

// ---- scalar activations ----

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Scalar>
Scalar silu(Scalar x) {
  return x * sigmoid(x);
}

template <typename Scalar>
Scalar silu_grad(Scalar x) {
  const Scalar s = sigmoid(x);
  return s * (Scalar(1) + x * (Scalar(1) - s));
}

template <typename Scalar>
Scalar gelu(Scalar x) {
  return Scalar(0.5) * x * (Scalar(1) + std::erf(x / Scalar(std::sqrt(2.0))));
}

template <typename Scalar>
Scalar gelu_grad(Scalar x) {
  const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(x / Scalar(std::sqrt(2.0))));
  const Scalar pdf = std::exp(Scalar(-0.5) * x * x) / Scalar(std::sqrt(2.0 * M_PI));
  return cdf + x * pdf;
}

enum class Activation { kSiLU, kGELU, kReLU };

/// Elementwise activation with a cached pre-activation for the backward pass.
template <typename Scalar>
struct ActCache {
  Activation kind = Activation::kSiLU;

  explicit ActCache(Activation k = Activation::kSiLU) : kind(k) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool cache = true) {
    if (cache) in_ = x;
    Tensor<Scalar> y = x;
    apply(y.data);
    return y;
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& g) const {
    Tensor<Scalar> gx = g;
    switch (kind) {
      case Activation::kSiLU:
        gx.data.array() *= in_.data.array().unaryExpr([](Scalar v) { return silu_grad(v); });
        break;
      case Activation::kGELU:
        gx.data.array() *= in_.data.array().unaryExpr([](Scalar v) { return gelu_grad(v); });
        break;
      case Activation::kReLU:
        gx.data.array() *=
            (in_.data.array() > Scalar(0)).template cast<Scalar>();
        break;
    }
    return gx;
  }

 private:
  void apply(Mat<Scalar>& m) const {
    switch (kind) {
      case Activation::kSiLU:
        m = m.unaryExpr([](Scalar v) { return silu(v); });
        break;
      case Activation::kGELU:
        m = m.unaryExpr([](Scalar v) { return gelu(v); });
        break;
      case Activation::kReLU:
        m = m.cwiseMax(Scalar(0));
        break;
    }
  }
  Tensor<Scalar> in_;
};

/// Column-wise softmax (each column sums to one).
template <typename Scalar>
Mat<Scalar> softmax_columns(const Mat<Scalar>& x) {
  Mat<Scalar> y(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const Scalar mx = x.col(c).maxCoeff();
    Vec<Scalar> e = (x.col(c).array() - mx).exp();
    y.col(c) = e / e.sum();
  }
  return y;
}

/// Backward of column-wise softmax given its output y and upstream grad g.
template <typename Scalar>
Mat<Scalar> softmax_columns_backward(const Mat<Scalar>& y, const Mat<Scalar>& g) {
  Mat<Scalar> gx(y.rows(), y.cols());
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    const Scalar dot = y.col(c).dot(g.col(c));
    gx.col(c) = y.col(c).array() * (g.col(c).array() - dot);
  }
  return gx;
}

}  // namespace depthkit::nn
