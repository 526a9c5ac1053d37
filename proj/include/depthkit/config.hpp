// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat key=value run configuration. Every knob has a documented default,
// unknown keys are errors, and the canonical serialization (sorted keys,
// shortest round-trip number formatting) is a parse fixed point. Environment
// variables DEPTHKIT_<KEY> (key upper-cased) override file values.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace depthkit {

struct RunConfig {
  // conditioning front-end
  std::string conditioning = "cide";  // cide | one_hot | precomputed
  long long classifier_classes = 1000;  // K
  long long classifier_width = 16;
  long long bank_size = 100;  // N learnable embeddings
  long long cide_mlp_hidden = 400;
  bool cide_softmax_logits = true;
  long long num_scenes = 27;
  std::string conditioning_vectors;  // path for precomputed variant

  // backbone
  long long e = 192;  // embedding dimension
  long long latent_channels = 4;
  long long unet_levels = 3;
  long long encoder_width = 16;
  std::string backbone_checkpoint;  // optional pretrained adapter source
  bool finetune_backbone = false;   // only consulted when a backbone checkpoint is set

  // noise schedule and extraction
  long long schedule_steps = 1000;
  double schedule_beta_start = 0.00085;
  double schedule_beta_end = 0.012;
  std::string schedule_kind = "scaled_linear";  // linear | scaled_linear
  long long extract_t = 1;

  // depth head
  long long decoder_stages = 5;
  double d_max = 0.0;  // 0 -> profile default
  std::string head_act = "gelu";  // gelu | silu | relu

  // loss
  double silog_lambda = 0.85;
  double silog_alpha = 10.0;

  // trainer
  long long epochs = 25;
  long long batch_size = 32;
  double lr_min = 3e-5;
  double lr_max = 5e-4;
  double weight_decay = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double layer_decay = 0.9;
  double warmup_frac = 0.3;
  long long seed = 0;
  bool toy_profile = false;
  long long max_steps = 0;  // 0 -> run the full epoch budget

  // data
  std::string profile = "indoor";
  std::string train_split = "train.txt";
  std::string eval_split = "test.txt";
  double depth_png_scale = 0.0;  // 0 -> profile default
  double cap = 0.0;              // 0 -> profile default
  double d_min = 1e-3;
  std::string crop;  // "" -> profile default; none | eigen | garg
  long long input_height = 0;  // 0 -> profile default
  long long input_width = 0;
  long long workers = 1;
  bool per_image_metrics = true;
  bool eval_oracle_inject = false;

  // augmentation
  double aug_flip_prob = 0.5;
  double aug_hue_max = 0.1;
  double aug_brightness_max = 0.2;
  double aug_cutdepth_p = 0.25;
  double aug_cutdepth_alpha = 0.75;

  static RunConfig from_string(const std::string& text, bool apply_env = false);
  static RunConfig from_file(const std::filesystem::path& path, bool apply_env = false);

  /// Sorted key = value lines; a fixed point of parse -> serialize.
  std::string canonical() const;
  uint64_t hash() const;
  std::string hash_hex() const;

  void validate() const;

  /// Environment variable name carrying an override for `key`.
  static std::string env_var_for(const std::string& key);
};

}  // namespace depthkit
