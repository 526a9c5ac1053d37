// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "depthkit/errors.hpp"
#include "depthkit/rng.hpp"

namespace depthkit {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Arr = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Dense CHW feature map. Storage is a channels x (h*w) matrix; pixel p maps
/// to column y*w + x, so one image pixel is a contiguous channel vector.
template <typename Scalar>
struct Tensor {
  Mat<Scalar> data;
  int h = 0;
  int w = 0;

  Tensor() = default;
  Tensor(int channels, int height, int width)
      : data(Mat<Scalar>::Zero(channels, static_cast<Eigen::Index>(height) * width)),
        h(height),
        w(width) {}

  int channels() const { return static_cast<int>(data.rows()); }
  Eigen::Index pixels() const { return static_cast<Eigen::Index>(h) * w; }

  Scalar& at(int c, int y, int x) { return data(c, static_cast<Eigen::Index>(y) * w + x); }
  Scalar at(int c, int y, int x) const { return data(c, static_cast<Eigen::Index>(y) * w + x); }

  bool same_shape(const Tensor& o) const {
    return h == o.h && w == o.w && data.rows() == o.data.rows();
  }
  bool all_finite() const { return data.allFinite(); }

  std::string shape_str() const {
    return "[" + std::to_string(channels()) + ", " + std::to_string(h) + ", " +
           std::to_string(w) + "]";
  }

  static Tensor random_normal(int c, int height, int width, Rng& rng, Scalar stddev = Scalar(1)) {
    Tensor t(c, height, width);
    for (Eigen::Index i = 0; i < t.data.size(); ++i)
      t.data.data()[i] = static_cast<Scalar>(rng.normal(0.0, static_cast<double>(stddev)));
    return t;
  }
};

template <typename Scalar>
void require_same_shape(const Tensor<Scalar>& a, const Tensor<Scalar>& b, const char* what) {
  if (!a.same_shape(b))
    throw ContractError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                        b.shape_str());
}

/// Stacks tensors along the channel axis. All inputs share spatial dims.
template <typename Scalar>
Tensor<Scalar> concat_channels(const std::vector<Tensor<Scalar>>& parts) {
  if (parts.empty()) throw ContractError("concat_channels: empty input");
  int total = 0;
  for (const auto& p : parts) {
    if (p.h != parts[0].h || p.w != parts[0].w)
      throw ContractError("concat_channels: spatial dims differ");
    total += p.channels();
  }
  Tensor<Scalar> out(total, parts[0].h, parts[0].w);
  int row = 0;
  for (const auto& p : parts) {
    out.data.middleRows(row, p.channels()) = p.data;
    row += p.channels();
  }
  return out;
}

template <typename Scalar>
std::vector<Tensor<Scalar>> split_channels(const Tensor<Scalar>& t,
                                           const std::vector<int>& sizes) {
  std::vector<Tensor<Scalar>> parts;
  int row = 0;
  for (int c : sizes) {
    Tensor<Scalar> p(c, t.h, t.w);
    p.data = t.data.middleRows(row, c);
    row += c;
    parts.push_back(std::move(p));
  }
  if (row != t.channels()) throw ContractError("split_channels: sizes do not cover tensor");
  return parts;
}

namespace detail {

struct ResizeTap {
  int i0, i1;
  double w1;  // weight on i1; weight on i0 is 1 - w1
};

// align_corners=false convention: src = (dst + 0.5) * (in/out) - 0.5.
inline std::vector<ResizeTap> resize_taps(int in, int out) {
  std::vector<ResizeTap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int d = 0; d < out; ++d) {
    double src = (d + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    if (src > in - 1) src = in - 1;
    int i0 = static_cast<int>(src);
    int i1 = i0 + 1 < in ? i0 + 1 : i0;
    taps[d] = {i0, i1, src - i0};
  }
  return taps;
}

}  // namespace detail

/// Bilinear resize to (oh, ow). Identity when dims already match.
template <typename Scalar>
Tensor<Scalar> resize_bilinear(const Tensor<Scalar>& t, int oh, int ow) {
  if (oh == t.h && ow == t.w) return t;
  const auto ys = detail::resize_taps(t.h, oh);
  const auto xs = detail::resize_taps(t.w, ow);
  Tensor<Scalar> out(t.channels(), oh, ow);
  for (int oy = 0; oy < oh; ++oy) {
    const auto& ty = ys[oy];
    for (int ox = 0; ox < ow; ++ox) {
      const auto& tx = xs[ox];
      const Scalar wy1 = static_cast<Scalar>(ty.w1), wy0 = Scalar(1) - wy1;
      const Scalar wx1 = static_cast<Scalar>(tx.w1), wx0 = Scalar(1) - wx1;
      out.data.col(static_cast<Eigen::Index>(oy) * ow + ox) =
          wy0 * wx0 * t.data.col(static_cast<Eigen::Index>(ty.i0) * t.w + tx.i0) +
          wy0 * wx1 * t.data.col(static_cast<Eigen::Index>(ty.i0) * t.w + tx.i1) +
          wy1 * wx0 * t.data.col(static_cast<Eigen::Index>(ty.i1) * t.w + tx.i0) +
          wy1 * wx1 * t.data.col(static_cast<Eigen::Index>(ty.i1) * t.w + tx.i1);
    }
  }
  return out;
}

/// Adjoint of resize_bilinear: scatters output-space gradients back to the
/// (ih, iw) input grid.
template <typename Scalar>
Tensor<Scalar> resize_bilinear_backward(const Tensor<Scalar>& grad_out, int ih, int iw) {
  if (grad_out.h == ih && grad_out.w == iw) return grad_out;
  const auto ys = detail::resize_taps(ih, grad_out.h);
  const auto xs = detail::resize_taps(iw, grad_out.w);
  Tensor<Scalar> gin(grad_out.channels(), ih, iw);
  for (int oy = 0; oy < grad_out.h; ++oy) {
    const auto& ty = ys[oy];
    for (int ox = 0; ox < grad_out.w; ++ox) {
      const auto& tx = xs[ox];
      const Scalar wy1 = static_cast<Scalar>(ty.w1), wy0 = Scalar(1) - wy1;
      const Scalar wx1 = static_cast<Scalar>(tx.w1), wx0 = Scalar(1) - wx1;
      const auto g = grad_out.data.col(static_cast<Eigen::Index>(oy) * grad_out.w + ox);
      gin.data.col(static_cast<Eigen::Index>(ty.i0) * iw + tx.i0) += wy0 * wx0 * g;
      gin.data.col(static_cast<Eigen::Index>(ty.i0) * iw + tx.i1) += wy0 * wx1 * g;
      gin.data.col(static_cast<Eigen::Index>(ty.i1) * iw + tx.i0) += wy1 * wx0 * g;
      gin.data.col(static_cast<Eigen::Index>(ty.i1) * iw + tx.i1) += wy1 * wx1 * g;
    }
  }
  return gin;
}

}  // namespace depthkit
