// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "depthkit/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

#include "depthkit/errors.hpp"
#include "depthkit/rng.hpp"

namespace depthkit {

namespace {

using FieldPtr = std::variant<long long RunConfig::*, double RunConfig::*, bool RunConfig::*,
                              std::string RunConfig::*>;

// Sorted by key; the canonical serializer walks this table.
const std::map<std::string, FieldPtr>& field_table() {
  static const std::map<std::string, FieldPtr> table = {
      {"adam_beta1", &RunConfig::adam_beta1},
      {"adam_beta2", &RunConfig::adam_beta2},
      {"aug_brightness_max", &RunConfig::aug_brightness_max},
      {"aug_cutdepth_alpha", &RunConfig::aug_cutdepth_alpha},
      {"aug_cutdepth_p", &RunConfig::aug_cutdepth_p},
      {"aug_flip_prob", &RunConfig::aug_flip_prob},
      {"aug_hue_max", &RunConfig::aug_hue_max},
      {"backbone_checkpoint", &RunConfig::backbone_checkpoint},
      {"bank_size", &RunConfig::bank_size},
      {"batch_size", &RunConfig::batch_size},
      {"cap", &RunConfig::cap},
      {"cide_mlp_hidden", &RunConfig::cide_mlp_hidden},
      {"cide_softmax_logits", &RunConfig::cide_softmax_logits},
      {"classifier_classes", &RunConfig::classifier_classes},
      {"classifier_width", &RunConfig::classifier_width},
      {"conditioning", &RunConfig::conditioning},
      {"conditioning_vectors", &RunConfig::conditioning_vectors},
      {"crop", &RunConfig::crop},
      {"d_max", &RunConfig::d_max},
      {"d_min", &RunConfig::d_min},
      {"decoder_stages", &RunConfig::decoder_stages},
      {"depth_png_scale", &RunConfig::depth_png_scale},
      {"e", &RunConfig::e},
      {"encoder_width", &RunConfig::encoder_width},
      {"epochs", &RunConfig::epochs},
      {"eval_oracle_inject", &RunConfig::eval_oracle_inject},
      {"eval_split", &RunConfig::eval_split},
      {"extract_t", &RunConfig::extract_t},
      {"finetune_backbone", &RunConfig::finetune_backbone},
      {"head_act", &RunConfig::head_act},
      {"input_height", &RunConfig::input_height},
      {"input_width", &RunConfig::input_width},
      {"latent_channels", &RunConfig::latent_channels},
      {"layer_decay", &RunConfig::layer_decay},
      {"lr_max", &RunConfig::lr_max},
      {"lr_min", &RunConfig::lr_min},
      {"max_steps", &RunConfig::max_steps},
      {"num_scenes", &RunConfig::num_scenes},
      {"per_image_metrics", &RunConfig::per_image_metrics},
      {"profile", &RunConfig::profile},
      {"schedule_beta_end", &RunConfig::schedule_beta_end},
      {"schedule_beta_start", &RunConfig::schedule_beta_start},
      {"schedule_kind", &RunConfig::schedule_kind},
      {"schedule_steps", &RunConfig::schedule_steps},
      {"seed", &RunConfig::seed},
      {"silog_alpha", &RunConfig::silog_alpha},
      {"silog_lambda", &RunConfig::silog_lambda},
      {"toy_profile", &RunConfig::toy_profile},
      {"train_split", &RunConfig::train_split},
      {"unet_levels", &RunConfig::unet_levels},
      {"warmup_frac", &RunConfig::warmup_frac},
      {"weight_decay", &RunConfig::weight_decay},
      {"workers", &RunConfig::workers},
  };
  return table;
}

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip form
  return std::string(buf, res.ptr);
}

void set_field(RunConfig& cfg, const std::string& key, const std::string& value, int line) {
  const auto it = field_table().find(key);
  if (it == field_table().end())
    throw ConfigError("unknown config key '" + key + "' at line " + std::to_string(line));
  const std::string v = trim(value);
  std::visit(
      [&](auto ptr) {
        using T = std::remove_cvref_t<decltype(cfg.*ptr)>;
        if constexpr (std::is_same_v<T, long long>) {
          long long parsed = 0;
          auto res = std::from_chars(v.data(), v.data() + v.size(), parsed);
          if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
            throw ConfigError("key '" + key + "': expected integer, got '" + v + "'");
          cfg.*ptr = parsed;
        } else if constexpr (std::is_same_v<T, double>) {
          double parsed = 0;
          auto res = std::from_chars(v.data(), v.data() + v.size(), parsed);
          if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
            throw ConfigError("key '" + key + "': expected real number, got '" + v + "'");
          cfg.*ptr = parsed;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (v == "true")
            cfg.*ptr = true;
          else if (v == "false")
            cfg.*ptr = false;
          else
            throw ConfigError("key '" + key + "': expected true|false, got '" + v + "'");
        } else {
          cfg.*ptr = v;
        }
      },
      it->second);
}

std::string get_field(const RunConfig& cfg, const FieldPtr& ptr) {
  return std::visit(
      [&](auto p) -> std::string {
        using T = std::remove_cvref_t<decltype(cfg.*p)>;
        if constexpr (std::is_same_v<T, long long>) {
          return std::to_string(cfg.*p);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(cfg.*p);
        } else if constexpr (std::is_same_v<T, bool>) {
          return cfg.*p ? "true" : "false";
        } else {
          return cfg.*p;
        }
      },
      ptr);
}

// Desk-scale preset: lowers any model-size key still at its full-scale
// default. Explicitly set keys win because they no longer match the default.
void apply_toy_preset(RunConfig& cfg) {
  const RunConfig def;
  if (cfg.e == def.e) cfg.e = 8;
  if (cfg.classifier_classes == def.classifier_classes) cfg.classifier_classes = 16;
  if (cfg.classifier_width == def.classifier_width) cfg.classifier_width = 8;
  if (cfg.encoder_width == def.encoder_width) cfg.encoder_width = 8;
  if (cfg.bank_size == def.bank_size) cfg.bank_size = 16;
  if (cfg.cide_mlp_hidden == def.cide_mlp_hidden) cfg.cide_mlp_hidden = 32;
  if (cfg.num_scenes == def.num_scenes) cfg.num_scenes = 4;
  if (cfg.profile == def.profile) cfg.profile = "toy";
  if (cfg.batch_size == def.batch_size) cfg.batch_size = 4;
}

}  // namespace

RunConfig RunConfig::from_string(const std::string& text, bool apply_env) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + " is not 'key = value'");
    set_field(cfg, trim(t.substr(0, eq)), t.substr(eq + 1), lineno);
  }
  if (apply_env) {
    for (const auto& [key, ptr] : field_table()) {
      if (const char* v = std::getenv(env_var_for(key).c_str())) set_field(cfg, key, v, 0);
    }
  }
  if (cfg.toy_profile) apply_toy_preset(cfg);
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path, bool apply_env) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), apply_env);
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [key, ptr] : field_table()) {
    out += key;
    out += " = ";
    out += get_field(*this, ptr);
    out += '\n';
  }
  return out;
}

uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

std::string RunConfig::hash_hex() const {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

std::string RunConfig::env_var_for(const std::string& key) {
  std::string v = "DEPTHKIT_";
  for (char c : key) v += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return v;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
  };
  require(conditioning == "cide" || conditioning == "one_hot" || conditioning == "precomputed",
          "conditioning must be cide|one_hot|precomputed");
  require(classifier_classes >= 2, "classifier_classes must be >= 2");
  require(bank_size >= 1, "bank_size must be >= 1");
  require(cide_mlp_hidden >= 1, "cide_mlp_hidden must be >= 1");
  require(num_scenes >= 1, "num_scenes must be >= 1");
  require(e >= 1, "e must be >= 1");
  require(latent_channels >= 1, "latent_channels must be >= 1");
  require(unet_levels == 2 || unet_levels == 3, "unet_levels must be 2 or 3");
  require(encoder_width >= 1 && classifier_width >= 1, "widths must be >= 1");
  require(schedule_steps >= 1, "schedule_steps must be >= 1");
  require(schedule_beta_start > 0 && schedule_beta_start <= schedule_beta_end &&
              schedule_beta_end < 1,
          "need 0 < schedule_beta_start <= schedule_beta_end < 1");
  require(schedule_kind == "linear" || schedule_kind == "scaled_linear",
          "schedule_kind must be linear|scaled_linear");
  require(extract_t >= 0 && extract_t < schedule_steps, "extract_t outside the schedule");
  require(decoder_stages >= 1, "decoder_stages must be >= 1");
  require(d_max >= 0, "d_max must be >= 0 (0 uses the profile value)");
  require(head_act == "gelu" || head_act == "silu" || head_act == "relu",
          "head_act must be gelu|silu|relu");
  require(silog_lambda >= 0 && silog_lambda <= 1, "silog_lambda must be in [0,1]");
  require(silog_alpha > 0, "silog_alpha must be positive");
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(lr_min > 0 && lr_min <= lr_max, "need 0 < lr_min <= lr_max");
  require(weight_decay >= 0, "weight_decay must be >= 0");
  require(adam_beta1 > 0 && adam_beta1 < 1 && adam_beta2 > 0 && adam_beta2 < 1,
          "adam betas must be in (0,1)");
  require(layer_decay > 0 && layer_decay <= 1, "layer_decay must be in (0,1]");
  require(warmup_frac > 0 && warmup_frac < 1, "warmup_frac must be in (0,1)");
  require(max_steps >= 0, "max_steps must be >= 0");
  require(d_min >= 0, "d_min must be >= 0");
  require(cap >= 0, "cap must be >= 0 (0 uses the profile value)");
  require(crop.empty() || crop == "none" || crop == "eigen" || crop == "garg",
          "crop must be none|eigen|garg");
  require(input_height >= 0 && input_height % 32 == 0,
          "input_height must be a multiple of 32 (or 0)");
  require(input_width >= 0 && input_width % 32 == 0,
          "input_width must be a multiple of 32 (or 0)");
  require(workers >= 1, "workers must be >= 1");
  require(aug_flip_prob >= 0 && aug_flip_prob <= 1, "aug_flip_prob must be in [0,1]");
  require(aug_hue_max >= 0 && aug_hue_max <= 0.5, "aug_hue_max must be in [0,0.5]");
  require(aug_brightness_max >= 0 && aug_brightness_max < 1,
          "aug_brightness_max must be in [0,1)");
  require(aug_cutdepth_p >= 0 && aug_cutdepth_p <= 1, "aug_cutdepth_p must be in [0,1]");
  require(aug_cutdepth_alpha > 0 && aug_cutdepth_alpha <= 1,
          "aug_cutdepth_alpha must be in (0,1]");
}

}  // namespace depthkit
