// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "depthkit/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace depthkit {

namespace {

AdamWConfig adamw_config(const RunConfig& cfg) {
  AdamWConfig ac;
  ac.beta1 = cfg.adam_beta1;
  ac.beta2 = cfg.adam_beta2;
  ac.weight_decay = cfg.weight_decay;
  ac.layer_decay = cfg.layer_decay;
  ac.num_lr_blocks = DepthModel::kNumLrBlocks;
  return ac;
}

}  // namespace

Trainer::Trainer(DepthModel& model, long total_steps)
    : model_(model),
      pipeline_(model),
      opt_(model.parameters(), adamw_config(model.config())),
      total_steps_(std::max(1L, total_steps)) {}

double Trainer::current_lr() const {
  const auto& cfg = model_.config();
  return one_cycle_lr(std::min(step_, total_steps_), total_steps_, cfg.lr_min, cfg.lr_max,
                      cfg.warmup_frac);
}

double Trainer::train_step(const std::vector<DepthSample>& batch) {
  if (batch.empty()) throw ContractError("train_step: empty batch");
  const auto& cfg = model_.config();
  model_.zero_grad();
  double loss_sum = 0;
  for (const auto& sample : batch) {
    if (!sample.gt_depth) throw DataError("sample '" + sample.id + "' has no ground truth");
    Arr<double> pred = pipeline_.forward_cached(sample);
    auto res = silog_loss_with_grad<double>(pred, *sample.gt_depth, sample.mask,
                                            cfg.silog_lambda, cfg.silog_alpha);
    loss_sum += res.loss;
    res.grad_pred /= static_cast<double>(batch.size());
    pipeline_.backward(res.grad_pred);
  }
  const double loss = loss_sum / static_cast<double>(batch.size());
  if (!std::isfinite(loss)) {
    std::string ids;
    for (const auto& s : batch) ids += (ids.empty() ? "" : ", ") + s.id;
    throw NumericalError("non-finite loss at step " + std::to_string(step_) +
                         "; batch ids: " + ids);
  }
  opt_.step(current_lr());
  ++step_;
  return loss;
}

Checkpoint Trainer::make_checkpoint(const std::string& rng_state) {
  Checkpoint ckpt;
  ckpt.config_text = model_.config().canonical();
  ckpt.config_hash = model_.config().hash();
  ckpt.global_step = static_cast<uint64_t>(step_);
  ckpt.rng_state = rng_state;
  ckpt.fingerprints = model_.frozen_fingerprints();
  const auto& params = opt_.params();
  for (size_t i = 0; i < params.size(); ++i) {
    ckpt.arrays[params[i]->name] = params[i]->value;
    if (params[i]->trainable) {
      ckpt.arrays[params[i]->name + ".adam_m"] = opt_.moment1(i);
      ckpt.arrays[params[i]->name + ".adam_v"] = opt_.moment2(i);
    }
  }
  return ckpt;
}

void Trainer::restore(const Checkpoint& ckpt, bool allow_config_mismatch) {
  if (ckpt.config_hash != model_.config().hash()) {
    if (!allow_config_mismatch)
      throw ConfigError(
          "checkpoint config hash does not match the active config; pass the explicit override "
          "to load anyway");
    std::fprintf(stderr, "warning: loading checkpoint with mismatched config hash\n");
  }
  apply_arrays(ckpt.arrays, model_.parameters());
  const auto& params = opt_.params();
  for (size_t i = 0; i < params.size(); ++i) {
    const auto m = ckpt.arrays.find(params[i]->name + ".adam_m");
    const auto v = ckpt.arrays.find(params[i]->name + ".adam_v");
    if (m != ckpt.arrays.end() && m->second.size() == opt_.moment1(i).size())
      opt_.moment1(i) = m->second;
    if (v != ckpt.arrays.end() && v->second.size() == opt_.moment2(i).size())
      opt_.moment2(i) = v->second;
  }
  step_ = static_cast<long>(ckpt.global_step);
  opt_.set_step_count(step_);
}

TrainRunResult run_training(DepthModel& model, const SampleLoader& loader,
                            const std::filesystem::path& out_dir,
                            const std::function<void(long, double)>& on_step) {
  const RunConfig& cfg = model.config();
  if (loader.size() == 0) throw DataError("training split is empty");
  std::filesystem::create_directories(out_dir);

  const long batches_per_epoch =
      static_cast<long>((loader.size() + cfg.batch_size - 1) / cfg.batch_size);
  long total_steps = cfg.epochs * batches_per_epoch;
  if (cfg.max_steps > 0) total_steps = std::min<long>(total_steps, cfg.max_steps);

  Trainer trainer(model, total_steps);
  const AugmentPolicy policy = AugmentPolicy::from_config(cfg);
  const auto seed = static_cast<uint64_t>(cfg.seed);

  std::ofstream log(out_dir / "train.log", std::ios::app);
  if (!log) throw DataError("cannot open training log in " + out_dir.string());
  const auto t0 = std::chrono::steady_clock::now();

  TrainRunResult result;
  result.checkpoint_path = out_dir / "checkpoint.dkc";
  bool done = false;
  for (long long epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    std::vector<size_t> order(loader.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::shuffle(order.begin(), order.end(),
                 Rng(derive_seed(derive_seed(seed, "epoch_order"), static_cast<uint64_t>(epoch))).engine());

    for (size_t begin = 0; begin < order.size() && !done;
         begin += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(order.size(), begin + static_cast<size_t>(cfg.batch_size));
      std::vector<DepthSample> batch(end - begin);
      // Per-sample RNG derives from (epoch, dataset index), never from the
      // worker that happened to load it.
      parallel_for_indices(end - begin, static_cast<int>(cfg.workers), [&](size_t i) {
        const size_t idx = order[begin + i];
        DepthSample s = loader.load(idx);
        batch[i] = augment(
            s, derive_seed(derive_seed(seed, "augment"), static_cast<uint64_t>(epoch), idx),
            policy);
      });
      const double lr = trainer.current_lr();
      const double loss = trainer.train_step(batch);
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log << trainer.global_step() - 1 << ", " << lr << ", " << loss << ", " << wall << "\n";
      log.flush();
      if (result.steps == 0) result.first_loss = loss;
      result.last_loss = loss;
      ++result.steps;
      if (on_step) on_step(trainer.global_step() - 1, loss);
      if (trainer.global_step() >= total_steps) done = true;
    }
    std::ostringstream rng_state;
    rng_state << Rng(derive_seed(derive_seed(seed, "resume"), static_cast<uint64_t>(epoch))).engine();
    save_checkpoint(result.checkpoint_path, trainer.make_checkpoint(rng_state.str()));
  }
  return result;
}

}  // namespace depthkit
