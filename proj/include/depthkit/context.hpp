// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "depthkit/tensor.hpp"

namespace depthkit {

/// Conditioning width injected into the denoiser via cross-attention.
inline constexpr int kContextWidth = 768;

/// One or more 768-wide conditioning tokens (columns).
template <typename Scalar>
struct ContextEmbedding {
  Mat<Scalar> tokens;  // kContextWidth x S

  ContextEmbedding() = default;
  explicit ContextEmbedding(Mat<Scalar> t) : tokens(std::move(t)) {
    if (tokens.rows() != kContextWidth)
      throw ContractError("ContextEmbedding: width must be " + std::to_string(kContextWidth) +
                          ", got " + std::to_string(tokens.rows()));
    if (!tokens.allFinite()) throw ContractError("ContextEmbedding: non-finite entries");
  }

  int token_count() const { return static_cast<int>(tokens.cols()); }
};

}  // namespace depthkit
