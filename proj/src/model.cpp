// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "depthkit/model.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "depthkit/checkpoint.hpp"

namespace depthkit {

ConditioningVariant conditioning_variant_from_string(const std::string& s) {
  if (s == "cide") return ConditioningVariant::kCide;
  if (s == "one_hot") return ConditioningVariant::kOneHot;
  if (s == "precomputed") return ConditioningVariant::kPrecomputed;
  throw ConfigError("unknown conditioning variant '" + s + "'");
}

std::string to_string(ConditioningVariant v) {
  switch (v) {
    case ConditioningVariant::kCide: return "cide";
    case ConditioningVariant::kOneHot: return "one_hot";
    case ConditioningVariant::kPrecomputed: return "precomputed";
  }
  return "cide";
}

PrecomputedVectors PrecomputedVectors::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open conditioning vectors file " + path.string());
  PrecomputedVectors out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string id;
    if (!(ls >> id) || id[0] == '#') continue;
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (vals.empty())
      throw DataError("vectors file " + path.string() + " line " + std::to_string(lineno) +
                      ": no values for id '" + id + "'");
    Vec<double> vec(static_cast<Eigen::Index>(vals.size()));
    for (size_t i = 0; i < vals.size(); ++i) vec(static_cast<Eigen::Index>(i)) = vals[i];
    out.by_id[id] = std::move(vec);
  }
  return out;
}

const Vec<double>& PrecomputedVectors::get(const std::string& id) const {
  const auto it = by_id.find(id);
  if (it == by_id.end()) throw DataError("no precomputed conditioning vector for sample '" + id + "'");
  return it->second;
}

namespace {

nn::Activation activation_from_string(const std::string& s) {
  if (s == "gelu") return nn::Activation::kGELU;
  if (s == "silu") return nn::Activation::kSiLU;
  if (s == "relu") return nn::Activation::kReLU;
  throw ConfigError("unknown activation '" + s + "'");
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
  return s == "linear" ? ScheduleKind::kLinear : ScheduleKind::kScaledLinear;
}

}  // namespace

DepthModel::DepthModel(const RunConfig& cfg)
    : cfg_(cfg),
      profile_(resolve_profile(cfg)),
      variant_(conditioning_variant_from_string(cfg.conditioning)),
      schedule_(make_noise_schedule(static_cast<int>(cfg.schedule_steps), cfg.schedule_beta_start,
                                    cfg.schedule_beta_end,
                                    schedule_kind_from_string(cfg.schedule_kind))) {
  const auto seed = static_cast<uint64_t>(cfg.seed);
  const int e = static_cast<int>(cfg.e);

  {
    Rng rng(derive_seed(seed, "encoder"));
    encoder_ = std::make_unique<ToyEncoder<double>>(static_cast<int>(cfg.latent_channels),
                                                    static_cast<int>(cfg.encoder_width), rng);
    encoder_->set_lr_block(0);
  }
  if (variant_ == ConditioningVariant::kCide) {
    Rng crng(derive_seed(seed, "classifier"));
    classifier_ = std::make_unique<ToyClassifier<double>>(static_cast<int>(cfg.classifier_classes),
                                                          static_cast<int>(cfg.classifier_width),
                                                          crng);
    CideConfig cc;
    cc.num_classes = static_cast<int>(cfg.classifier_classes);
    cc.mlp_hidden = static_cast<int>(cfg.cide_mlp_hidden);
    cc.bank_size = static_cast<int>(cfg.bank_size);
    cc.softmax_logits = cfg.cide_softmax_logits;
    Rng rng(derive_seed(seed, "cide"));
    cide_ = std::make_unique<Cide<double>>(cc, rng);
    classifier_->set_lr_block(1);
    cide_->set_lr_block(1);
  } else if (variant_ == ConditioningVariant::kOneHot) {
    Rng rng(derive_seed(seed, "scene_embed"));
    scene_embed_ = std::make_unique<SceneEmbedding<double>>(static_cast<int>(cfg.num_scenes), rng);
    scene_embed_->set_lr_block(1);
  } else {
    if (cfg.conditioning_vectors.empty())
      throw ConfigError("conditioning = precomputed requires conditioning_vectors");
    vectors_ = PrecomputedVectors::load(cfg.conditioning_vectors);
  }
  {
    ToyUNetConfig uc;
    uc.latent_channels = static_cast<int>(cfg.latent_channels);
    uc.e = e;
    uc.levels = static_cast<int>(cfg.unet_levels);
    Rng rng(derive_seed(seed, "denoiser"));
    denoiser_ = std::make_unique<ToyUNet<double>>(uc, rng);
    denoiser_->set_lr_block(2);
  }
  {
    std::vector<int> level_channels;
    for (int i = 0; i < static_cast<int>(cfg.unet_levels); ++i)
      level_channels.push_back(denoiser_->width(i));
    Rng rng(derive_seed(seed, "aggregator"));
    aggregator_ = std::make_unique<FeatureAggregator<double>>("aggregator", level_channels, e, rng);
    aggregator_->set_lr_block(3);
  }
  decoder_cfg_.e = e;
  decoder_cfg_.stages = static_cast<int>(cfg.decoder_stages);
  decoder_cfg_.d_max = profile_.d_max;
  decoder_cfg_.act = activation_from_string(cfg.head_act);
  {
    Rng rng(derive_seed(seed, "decoder"));
    decoder_ = std::make_unique<UpsamplingDecoder<double>>("decoder", e, decoder_cfg_.stages,
                                                           decoder_cfg_.act, rng);
    decoder_->set_lr_block(4);
  }
  {
    Rng rng(derive_seed(seed, "regressor"));
    regressor_ = std::make_unique<DepthRegressor<double>>(
        "regressor", decoder_->out_channels(), e, decoder_cfg_.d_max, decoder_cfg_.act, rng);
    regressor_->set_lr_block(5);
  }

  // Pretrained-weight adapter: the backbone (encoder + denoiser) loads named
  // arrays from a checkpoint container and is frozen unless fine-tuning is
  // switched on.
  if (!cfg.backbone_checkpoint.empty()) {
    const Checkpoint ckpt = load_checkpoint(cfg.backbone_checkpoint);
    std::vector<nn::Parameter<double>*> backbone;
    encoder_->collect_params(backbone);
    denoiser_->collect_params(backbone);
    apply_arrays(ckpt.arrays, backbone);
    backbone_trainable_ = cfg.finetune_backbone;
  }
  if (!backbone_trainable_) {
    encoder_->set_trainable(false);
    denoiser_->set_trainable(false);
  }
}

ContextEmbedding<double> DepthModel::condition(const DepthSample& sample, bool cache) {
  switch (variant_) {
    case ConditioningVariant::kCide:
      return cide_->forward(classifier_->logits(sample.image), cache);
    case ConditioningVariant::kOneHot:
      if (!sample.scene_index)
        throw DataError("sample '" + sample.id +
                        "' has no scene index; one_hot conditioning needs a scene label per image");
      return scene_embed_->forward(*sample.scene_index, cache);
    case ConditioningVariant::kPrecomputed:
      return precomputed_condition(vectors_->get(sample.id));
  }
  throw ContractError("unreachable conditioning variant");
}

void DepthModel::condition_backward(const Mat<double>& grad_ctx) {
  switch (variant_) {
    case ConditioningVariant::kCide:
      cide_->backward(grad_ctx);
      break;
    case ConditioningVariant::kOneHot:
      scene_embed_->backward(grad_ctx);
      break;
    case ConditioningVariant::kPrecomputed:
      break;  // external vectors receive no gradient
  }
}

std::vector<nn::Parameter<double>*> DepthModel::parameters() {
  std::vector<nn::Parameter<double>*> out;
  encoder_->collect_params(out);
  if (classifier_) classifier_->collect_params(out);
  if (cide_) cide_->collect_params(out);
  if (scene_embed_) scene_embed_->collect_params(out);
  denoiser_->collect_params(out);
  aggregator_->collect_params(out);
  decoder_->collect_params(out);
  regressor_->collect_params(out);
  return out;
}

std::vector<nn::Parameter<double>*> DepthModel::trainable_parameters() {
  std::vector<nn::Parameter<double>*> out;
  for (auto* p : parameters())
    if (p->trainable) out.push_back(p);
  return out;
}

void DepthModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

std::vector<std::pair<std::string, uint64_t>> DepthModel::frozen_fingerprints() {
  std::vector<std::pair<std::string, uint64_t>> out;
  if (classifier_) out.emplace_back("classifier", nn::fingerprint(*classifier_));
  if (!backbone_trainable_) {
    out.emplace_back("encoder", nn::fingerprint(*encoder_));
    out.emplace_back("denoiser", nn::fingerprint(*denoiser_));
  }
  return out;
}

}  // namespace depthkit
