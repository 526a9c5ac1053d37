// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Conditioning front-ends: the classifier-logit embedding module (weighted
// sum of a learnable bank, projected to the context width), a one-hot scene
// variant, and pass-through precomputed vectors.
#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "depthkit/context.hpp"
#include "depthkit/latent_codec.hpp"
#include "depthkit/nn/functional.hpp"
#include "depthkit/nn/layers.hpp"

namespace depthkit {

/// Frozen image classifier producing a K-dimensional logit vector. Forward
/// only: no gradient ever flows into it.
template <typename Scalar>
class Classifier : public nn::Module<Scalar> {
 public:
  virtual Vec<Scalar> logits(const Image<Scalar>& img) = 0;
  virtual int num_classes() const = 0;
};

/// Small convolutional classifier for desk-scale runs; constructed frozen.
template <typename Scalar>
class ToyClassifier final : public Classifier<Scalar> {
 public:
  ToyClassifier(int num_classes, int width, Rng& rng, const std::string& name = "classifier")
      : num_classes_(num_classes),
        conv1_(name + ".conv1", 3, width, 3, 2, 1, rng),
        conv2_(name + ".conv2", width, 2 * width, 3, 2, 1, rng),
        head_(name + ".head", 2 * width, num_classes, rng) {
    this->set_trainable(false);
  }

  Vec<Scalar> logits(const Image<Scalar>& img) override {
    Tensor<Scalar> x = img.data;
    // Channel standardization is applied only on this path.
    for (int c = 0; c < 3; ++c)
      x.data.row(c) = (x.data.row(c).array() - Scalar(kMean[c])) / Scalar(kStd[c]);
    Tensor<Scalar> h = conv1_.forward(x, false);
    h.data = h.data.unaryExpr([](Scalar v) { return nn::silu(v); });
    h = conv2_.forward(h, false);
    h.data = h.data.unaryExpr([](Scalar v) { return nn::silu(v); });
    Mat<Scalar> pooled = h.data.rowwise().mean();
    return head_.forward(pooled, false).col(0);
  }

  int num_classes() const override { return num_classes_; }

  void collect_params(std::vector<nn::Parameter<Scalar>*>& out) override {
    conv1_.collect_params(out);
    conv2_.collect_params(out);
    head_.collect_params(out);
  }

 private:
  static constexpr double kMean[3] = {0.485, 0.456, 0.406};
  static constexpr double kStd[3] = {0.229, 0.224, 0.225};
  int num_classes_;
  nn::Conv2d<Scalar> conv1_;
  nn::Conv2d<Scalar> conv2_;
  nn::Linear<Scalar> head_;
};

struct CideConfig {
  int num_classes = 1000;   // K, must match the classifier
  int mlp_hidden = 400;     // hidden width of the two-layer MLP
  int bank_size = 100;      // N learnable embeddings
  int bank_dim = kContextWidth;
  bool softmax_logits = true;  // convert logits to probabilities before the MLP
  nn::Activation mlp_act = nn::Activation::kGELU;
};

/// Logits -> two-layer MLP -> weights over N learnable embeddings ->
/// linear projection to the 768-d context vector.
template <typename Scalar>
class Cide : public nn::Module<Scalar> {
 public:
  Cide(const CideConfig& cfg, Rng& rng, const std::string& name = "cide")
      : cfg_(cfg),
        mlp1_(name + ".mlp1", cfg.num_classes, cfg.mlp_hidden, rng),
        act_(cfg.mlp_act),
        mlp2_(name + ".mlp2", cfg.mlp_hidden, cfg.bank_size, rng),
        bank_(name + ".bank", cfg.bank_size, cfg.bank_dim),
        proj_(name + ".proj", cfg.bank_dim, kContextWidth, rng) {
    bank_.init_normal(rng, 0.02);
  }

  const CideConfig& config() const { return cfg_; }

  ContextEmbedding<Scalar> forward(const Vec<Scalar>& logits, bool cache = true) {
    if (logits.size() != cfg_.num_classes)
      throw ConfigError("cide: classifier emits " + std::to_string(logits.size()) +
                        " logits but the MLP expects " + std::to_string(cfg_.num_classes));
    Mat<Scalar> in = logits;
    if (cfg_.softmax_logits) in = nn::softmax_columns<Scalar>(in);
    Mat<Scalar> w = mlp2_.forward(act_.forward_mat(mlp1_.forward(in, cache), cache), cache);
    return from_bank_weights(w, cache);
  }

  /// Test hook and second half of forward: C = proj(w . bank).
  ContextEmbedding<Scalar> from_bank_weights(const Mat<Scalar>& w, bool cache = true) {
    if (w.rows() != cfg_.bank_size)
      throw ConfigError("cide: weight vector length " + std::to_string(w.rows()) +
                        " != bank size " + std::to_string(cfg_.bank_size));
    if (cache) w_ = w;
    Mat<Scalar> emb = bank_.value.transpose() * w;  // [bank_dim x 1]
    return ContextEmbedding<Scalar>(proj_.forward(emb, cache));
  }

  /// Backpropagates to the MLP, bank and projection. The classifier is
  /// frozen, so the gradient chain ends at its logits.
  void backward(const Mat<Scalar>& grad_ctx) {
    Mat<Scalar> g_emb = proj_.backward(grad_ctx);
    bank_.grad.noalias() += w_ * g_emb.transpose();
    Mat<Scalar> g_w = bank_.value * g_emb;
    mlp1_.backward(act_.backward_mat(mlp2_.backward(g_w)));
  }

  void collect_params(std::vector<nn::Parameter<Scalar>*>& out) override {
    mlp1_.collect_params(out);
    mlp2_.collect_params(out);
    out.push_back(&bank_);
    proj_.collect_params(out);
  }

  nn::Parameter<Scalar>& bank() { return bank_; }
  nn::Linear<Scalar>& projection() { return proj_; }

 private:
  // Linear layers operate on matrices; reuse ActCache via a thin shim.
  struct MatAct {
    nn::Activation kind;
    Mat<Scalar> in;
    explicit MatAct(nn::Activation k) : kind(k) {}
    Mat<Scalar> forward_mat(const Mat<Scalar>& x, bool cache) {
      if (cache) in = x;
      switch (kind) {
        case nn::Activation::kSiLU:
          return x.unaryExpr([](Scalar v) { return nn::silu(v); });
        case nn::Activation::kGELU:
          return x.unaryExpr([](Scalar v) { return nn::gelu(v); });
        case nn::Activation::kReLU:
          return x.cwiseMax(Scalar(0));
      }
      return x;
    }
    Mat<Scalar> backward_mat(const Mat<Scalar>& g) const {
      switch (kind) {
        case nn::Activation::kSiLU:
          return (g.array() * in.array().unaryExpr([](Scalar v) { return nn::silu_grad(v); }))
              .matrix();
        case nn::Activation::kGELU:
          return (g.array() * in.array().unaryExpr([](Scalar v) { return nn::gelu_grad(v); }))
              .matrix();
        case nn::Activation::kReLU:
          return (g.array() * (in.array() > Scalar(0)).template cast<Scalar>()).matrix();
      }
      return g;
    }
  };

  CideConfig cfg_;
  nn::Linear<Scalar> mlp1_;
  MatAct act_;
  nn::Linear<Scalar> mlp2_;
  nn::Parameter<Scalar> bank_;  // [N x bank_dim]
  nn::Linear<Scalar> proj_;
  Mat<Scalar> w_;
};

/// Full classifier-conditioned path: C = cide(classifier(img)).
template <typename Scalar>
ContextEmbedding<Scalar> cide_forward(const Image<Scalar>& img, Classifier<Scalar>& clf,
                                      Cide<Scalar>& cide, bool cache = true) {
  return cide.forward(clf.logits(img), cache);
}

template <typename Scalar>
std::vector<ContextEmbedding<Scalar>> cide_forward(const std::vector<Image<Scalar>>& batch,
                                                   Classifier<Scalar>& clf, Cide<Scalar>& cide) {
  std::vector<ContextEmbedding<Scalar>> out;
  out.reserve(batch.size());
  for (const auto& img : batch) out.push_back(cide_forward(img, clf, cide, false));
  return out;
}

/// Scene-label variant: C = linear(one_hot(scene_index)).
template <typename Scalar>
class SceneEmbedding : public nn::Module<Scalar> {
 public:
  SceneEmbedding(int num_scenes, Rng& rng, const std::string& name = "scene_embed")
      : num_scenes_(num_scenes), linear_(name + ".linear", num_scenes, kContextWidth, rng) {
    if (num_scenes <= 0) throw ConfigError("SceneEmbedding: num_scenes must be positive");
  }

  ContextEmbedding<Scalar> forward(int scene_index, bool cache = true) {
    if (scene_index < 0 || scene_index >= num_scenes_)
      throw DataError("one_hot_condition: scene index " + std::to_string(scene_index) +
                      " outside [0, " + std::to_string(num_scenes_) + ")");
    Mat<Scalar> one_hot = Mat<Scalar>::Zero(num_scenes_, 1);
    one_hot(scene_index, 0) = Scalar(1);
    return ContextEmbedding<Scalar>(linear_.forward(one_hot, cache));
  }

  void backward(const Mat<Scalar>& grad_ctx) { linear_.backward(grad_ctx); }

  void collect_params(std::vector<nn::Parameter<Scalar>*>& out) override {
    linear_.collect_params(out);
  }

  nn::Linear<Scalar>& linear() { return linear_; }
  int num_scenes() const { return num_scenes_; }

 private:
  int num_scenes_;
  nn::Linear<Scalar> linear_;
};

/// Externally supplied conditioning vectors, reshaped to [S, 768] tokens.
template <typename Derived>
ContextEmbedding<typename Derived::Scalar> precomputed_condition(
    const Eigen::MatrixBase<Derived>& expr) {
  using Scalar = typename Derived::Scalar;
  Vec<Scalar> vec = expr;
  if (vec.size() == 0 || vec.size() % kContextWidth != 0)
    throw DataError("precomputed_condition: vector width " + std::to_string(vec.size()) +
                    " is not a positive multiple of " + std::to_string(kContextWidth));
  const int tokens = static_cast<int>(vec.size() / kContextWidth);
  Mat<Scalar> m(kContextWidth, tokens);
  for (int s = 0; s < tokens; ++s) m.col(s) = vec.segment(s * kContextWidth, kContextWidth);
  return ContextEmbedding<Scalar>(std::move(m));
}

}  // namespace depthkit
