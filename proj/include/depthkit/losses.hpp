// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "depthkit/errors.hpp"
#include "depthkit/tensor.hpp"

namespace depthkit {

/// Conversions between the NN's flat single-channel tensors and (h x w)
/// planes used by the data pipeline and metrics.
template <typename Scalar>
Arr<Scalar> to_plane(const Tensor<Scalar>& t) {
  if (t.channels() != 1) throw ContractError("to_plane: expected a single channel");
  Arr<Scalar> a(t.h, t.w);
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x) a(y, x) = t.at(0, y, x);
  return a;
}

template <typename Scalar>
Tensor<Scalar> from_plane(const Arr<Scalar>& a) {
  Tensor<Scalar> t(1, static_cast<int>(a.rows()), static_cast<int>(a.cols()));
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x) t.at(0, y, x) = a(y, x);
  return t;
}

template <typename Scalar>
struct SilogResult {
  Scalar loss;
  Arr<Scalar> grad_pred;  // zero outside the mask
};

namespace detail {

template <typename Scalar>
void check_silog_inputs(const Arr<Scalar>& pred, const Arr<Scalar>& gt, const MaskArray& mask) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols() || mask.rows() != pred.rows() ||
      mask.cols() != pred.cols())
    throw ContractError("silog_loss: shape mismatch");
  if (!mask.any()) throw DataError("silog_loss: empty validity mask");
  if ((mask && (pred <= Scalar(0) || gt <= Scalar(0))).any())
    throw DataError("silog_loss: nonpositive depth under the mask");
}

}  // namespace detail

/// Scale-invariant log loss: alpha * sqrt(mean(d^2) - lambda * mean(d)^2)
/// with d = ln(pred) - ln(gt) over masked pixels.
template <typename Scalar>
SilogResult<Scalar> silog_loss_with_grad(const Arr<Scalar>& pred, const Arr<Scalar>& gt,
                                         const MaskArray& mask, Scalar lambda = Scalar(0.85),
                                         Scalar alpha = Scalar(10)) {
  detail::check_silog_inputs(pred, gt, mask);
  const Eigen::Index n = mask.count();
  Scalar sum = 0, sum_sq = 0;
  Arr<Scalar> d = Arr<Scalar>::Zero(pred.rows(), pred.cols());
  for (Eigen::Index y = 0; y < pred.rows(); ++y)
    for (Eigen::Index x = 0; x < pred.cols(); ++x)
      if (mask(y, x)) {
        const Scalar v = std::log(pred(y, x)) - std::log(gt(y, x));
        d(y, x) = v;
        sum += v;
        sum_sq += v * v;
      }
  const Scalar m1 = sum / n;
  const Scalar m2 = sum_sq / n;
  // Negative-rounding guard written so NaN propagates to the caller instead
  // of being clamped into a finite loss.
  Scalar term = m2 - lambda * m1 * m1;
  if (term < Scalar(0)) term = Scalar(0);
  const Scalar loss = alpha * std::sqrt(term);

  SilogResult<Scalar> out{loss, Arr<Scalar>::Zero(pred.rows(), pred.cols())};
  if (term > Scalar(1e-12)) {
    const Scalar c = alpha / (n * std::sqrt(term));
    for (Eigen::Index y = 0; y < pred.rows(); ++y)
      for (Eigen::Index x = 0; x < pred.cols(); ++x)
        if (mask(y, x)) out.grad_pred(y, x) = c * (d(y, x) - lambda * m1) / pred(y, x);
  }
  return out;
}

template <typename Scalar>
Scalar silog_loss(const Arr<Scalar>& pred, const Arr<Scalar>& gt, const MaskArray& mask,
                  Scalar lambda = Scalar(0.85), Scalar alpha = Scalar(10)) {
  return silog_loss_with_grad(pred, gt, mask, lambda, alpha).loss;
}

}  // namespace depthkit
