// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "depthkit/rng.hpp"
#include "depthkit/tensor.hpp"

namespace depthkit::nn {

/// A named trainable array. Everything the optimizer, checkpointer and
/// layer-decay grouping need lives here.
template <typename Scalar>
struct Parameter {
  std::string name;
  Mat<Scalar> value;
  Mat<Scalar> grad;
  bool trainable = true;
  int lr_block = 0;  // position in the input->output stack, for layer-wise LR decay

  Parameter() = default;
  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)),
        value(Mat<Scalar>::Zero(rows, cols)),
        grad(Mat<Scalar>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
  void init_normal(Rng& rng, double stddev) {
    for (Eigen::Index i = 0; i < value.size(); ++i)
      value.data()[i] = static_cast<Scalar>(rng.normal(0.0, stddev));
  }
  void init_kaiming(Rng& rng, Eigen::Index fan_in) {
    init_normal(rng, std::sqrt(2.0 / static_cast<double>(fan_in)));
  }
};

template <typename Scalar>
class Module {
 public:
  virtual ~Module() = default;

  virtual void collect_params(std::vector<Parameter<Scalar>*>& out) = 0;

  std::vector<Parameter<Scalar>*> parameters() {
    std::vector<Parameter<Scalar>*> out;
    collect_params(out);
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  void set_trainable(bool trainable) {
    for (auto* p : parameters()) p->trainable = trainable;
  }

  void set_lr_block(int block) {
    for (auto* p : parameters()) p->lr_block = block;
  }

  size_t param_count() {
    size_t n = 0;
    for (auto* p : parameters()) n += static_cast<size_t>(p->value.size());
    return n;
  }
};

/// Hash of all parameter bytes in declaration order. Used as the freeze probe
/// for modules that must not move during training.
template <typename Scalar>
uint64_t fingerprint(Module<Scalar>& m) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (auto* p : m.parameters()) {
    h = fnv1a64(p->name, h);
    h = fnv1a64(p->value.data(), sizeof(Scalar) * static_cast<size_t>(p->value.size()), h);
  }
  return h;
}

}  // namespace depthkit::nn
