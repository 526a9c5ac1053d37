// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// The full model bundle: encoder, conditioning front-end, denoiser,
// aggregation, decoder and regressor, built deterministically from a
// RunConfig seed. Owns the freeze policy and layer-wise LR block assignment.
#pragma once

#include <memory>
#include <optional>
#include <unordered_map>

#include "depthkit/conditioning.hpp"
#include "depthkit/config.hpp"
#include "depthkit/dataset.hpp"
#include "depthkit/depth_head.hpp"
#include "depthkit/diffusion.hpp"
#include "depthkit/latent_codec.hpp"

namespace depthkit {

enum class ConditioningVariant { kCide, kOneHot, kPrecomputed };

ConditioningVariant conditioning_variant_from_string(const std::string& s);
std::string to_string(ConditioningVariant v);

/// Conditioning vectors keyed by sample id; text lines "<id> v0 v1 ...".
struct PrecomputedVectors {
  std::unordered_map<std::string, Vec<double>> by_id;

  static PrecomputedVectors load(const std::filesystem::path& path);
  const Vec<double>& get(const std::string& id) const;
};

class DepthModel {
 public:
  // Layer-wise LR blocks, ordered input -> output.
  static constexpr int kNumLrBlocks = 6;

  explicit DepthModel(const RunConfig& cfg);

  const RunConfig& config() const { return cfg_; }
  const DatasetProfile& profile() const { return profile_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const DecoderConfig& decoder_config() const { return decoder_cfg_; }
  ConditioningVariant variant() const { return variant_; }
  bool backbone_trainable() const { return backbone_trainable_; }

  /// Conditioning for a sample under the active variant. one_hot requires a
  /// scene index, precomputed a vector for the sample id.
  ContextEmbedding<double> condition(const DepthSample& sample, bool cache = true);
  void condition_backward(const Mat<double>& grad_ctx);

  ToyEncoder<double>& encoder() { return *encoder_; }
  ToyUNet<double>& denoiser() { return *denoiser_; }
  FeatureAggregator<double>& aggregator() { return *aggregator_; }
  UpsamplingDecoder<double>& decoder() { return *decoder_; }
  DepthRegressor<double>& regressor() { return *regressor_; }
  Cide<double>* cide() { return cide_.get(); }
  ToyClassifier<double>* classifier() { return classifier_.get(); }
  SceneEmbedding<double>* scene_embedding() { return scene_embed_.get(); }

  std::vector<nn::Parameter<double>*> parameters();
  std::vector<nn::Parameter<double>*> trainable_parameters();
  void zero_grad();

  /// Byte hashes of the modules that must not move during training.
  std::vector<std::pair<std::string, uint64_t>> frozen_fingerprints();

 private:
  RunConfig cfg_;
  DatasetProfile profile_;
  ConditioningVariant variant_;
  NoiseSchedule schedule_;
  DecoderConfig decoder_cfg_;
  bool backbone_trainable_ = true;

  std::unique_ptr<ToyEncoder<double>> encoder_;
  std::unique_ptr<ToyClassifier<double>> classifier_;
  std::unique_ptr<Cide<double>> cide_;
  std::unique_ptr<SceneEmbedding<double>> scene_embed_;
  std::optional<PrecomputedVectors> vectors_;
  std::unique_ptr<ToyUNet<double>> denoiser_;
  std::unique_ptr<FeatureAggregator<double>> aggregator_;
  std::unique_ptr<UpsamplingDecoder<double>> decoder_;
  std::unique_ptr<DepthRegressor<double>> regressor_;
};

}  // namespace depthkit
