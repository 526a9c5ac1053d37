// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Optimization service: per-batch train steps (AdamW, one-cycle LR,
// layer-wise decay), the epoch loop with deterministic shuffling and
// augmentation seeding, logging, and checkpointing.
#pragma once

#include <filesystem>
#include <functional>
#include <optional>

#include "depthkit/augment.hpp"
#include "depthkit/checkpoint.hpp"
#include "depthkit/optimizer.hpp"
#include "depthkit/pipeline.hpp"

namespace depthkit {

class Trainer {
 public:
  Trainer(DepthModel& model, long total_steps);

  /// One forward/backward pass over the batch and one optimizer step.
  /// Gradients flow only into trainable parameter groups. A non-finite loss
  /// aborts with a diagnostic naming the batch ids.
  double train_step(const std::vector<DepthSample>& batch);

  double current_lr() const;
  long global_step() const { return step_; }
  long total_steps() const { return total_steps_; }
  AdamW<double>& optimizer() { return opt_; }
  DepthModel& model() { return model_; }

  Checkpoint make_checkpoint(const std::string& rng_state = {}) ;
  /// Restores parameters (and optimizer moments when present). Config-hash
  /// mismatch is refused unless explicitly overridden.
  void restore(const Checkpoint& ckpt, bool allow_config_mismatch = false);

 private:
  DepthModel& model_;
  Pipeline pipeline_;
  AdamW<double> opt_;
  long total_steps_;
  long step_ = 0;
};

struct TrainRunResult {
  long steps = 0;
  double first_loss = 0;
  double last_loss = 0;
  std::filesystem::path checkpoint_path;
};

/// Full training run: shuffled epochs, augmentation seeded by
/// (seed, epoch, sample index), append-only "step, lr, loss, wall_time" log,
/// checkpoint per epoch. `on_step` (optional) observes (step, loss).
TrainRunResult run_training(DepthModel& model, const SampleLoader& loader,
                            const std::filesystem::path& out_dir,
                            const std::function<void(long, double)>& on_step = {});

}  // namespace depthkit
