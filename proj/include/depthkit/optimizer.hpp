// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "depthkit/lr_schedule.hpp"
#include "depthkit/nn/module.hpp"

namespace depthkit {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.1;
  double layer_decay = 1.0;  // multiplier per lr_block, deepest block scales by 1
  int num_lr_blocks = 1;
};

/// AdamW with decoupled weight decay and per-block layer-wise LR scaling.
/// Only trainable parameters move; frozen ones keep their bytes.
template <typename Scalar>
class AdamW {
 public:
  AdamW(std::vector<nn::Parameter<Scalar>*> params, const AdamWConfig& cfg)
      : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (auto* p : params_) {
      m_.push_back(Mat<Scalar>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
      auto* p = params_[i];
      if (!p->trainable) continue;
      const double scale =
          cfg_.layer_decay == 1.0
              ? 1.0
              : layer_lr_scale(p->lr_block, cfg_.num_lr_blocks, cfg_.layer_decay);
      const Scalar lr_p = static_cast<Scalar>(lr * scale);
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p->grad;
      v_[i].array() = cfg_.beta2 * v_[i].array() + (1.0 - cfg_.beta2) * p->grad.array().square();
      p->value.array() -=
          lr_p * ((m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + cfg_.eps) +
                  cfg_.weight_decay * p->value.array());
    }
  }

  long step_count() const { return t_; }
  const std::vector<nn::Parameter<Scalar>*>& params() const { return params_; }
  Mat<Scalar>& moment1(size_t i) { return m_[i]; }
  Mat<Scalar>& moment2(size_t i) { return v_[i]; }
  void set_step_count(long t) { t_ = t; }

 private:
  std::vector<nn::Parameter<Scalar>*> params_;
  AdamWConfig cfg_;
  std::vector<Mat<Scalar>> m_, v_;
  long t_ = 0;
};

}  // namespace depthkit
