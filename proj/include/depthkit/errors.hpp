// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace depthkit {

// Exit-code taxonomy for the CLI: 0 ok, 2 config, 3 data, 4 numerical.
// Anything else that escapes maps to 1.

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad configuration values or misconfigured module wiring.
struct ConfigError : Error {
  using Error::Error;
};

/// Problems with input data: missing files, malformed listings, empty masks.
struct DataError : Error {
  using Error::Error;
};

/// Non-finite values where the pipeline requires finiteness.
struct NumericalError : Error {
  using Error::Error;
};

/// Violation of an internal call contract (shape mismatch, bad index).
struct ContractError : Error {
  using Error::Error;
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const NumericalError*>(&e)) return 4;
  return 1;
}

}  // namespace depthkit
