// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "depthkit/errors.hpp"

namespace depthkit {

/// One-cycle schedule: linear from lr_min to lr_max over the warmup
/// fraction of total_steps, then linearly back to lr_min. Continuous, attains
/// its max exactly once, equals lr_min at both endpoints.
inline double one_cycle_lr(long step, long total_steps, double lr_min, double lr_max,
                           double warmup_frac = 0.3) {
  if (total_steps < 1) throw ContractError("one_cycle_lr: total_steps must be >= 1");
  if (step < 0 || step > total_steps)
    throw ContractError("one_cycle_lr: step " + std::to_string(step) + " outside [0, " +
                        std::to_string(total_steps) + "]");
  if (!(lr_min > 0 && lr_min <= lr_max)) throw ContractError("one_cycle_lr: need 0 < lr_min <= lr_max");
  if (!(warmup_frac > 0 && warmup_frac < 1))
    throw ContractError("one_cycle_lr: warmup_frac must be in (0,1)");
  const long peak = std::clamp(std::lround(warmup_frac * total_steps), 1L, total_steps);
  if (step <= peak)
    return lr_min + (lr_max - lr_min) * static_cast<double>(step) / peak;
  return lr_max - (lr_max - lr_min) * static_cast<double>(step - peak) / (total_steps - peak);
}

/// Layer-wise LR multiplier: decay^(num_layers - 1 - layer_index); the
/// deepest (output-side) block gets 1.
inline double layer_lr_scale(int layer_index, int num_layers, double decay) {
  if (layer_index < 0 || layer_index >= num_layers)
    throw ContractError("layer_lr_scale: layer index out of range");
  return std::pow(decay, num_layers - 1 - layer_index);
}

}  // namespace depthkit
