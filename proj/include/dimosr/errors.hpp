// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dimosr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes or channel counts do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid model, training or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Unsupported or malformed on-disk data (PNG, manifest).
class FormatError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Training hit a non-finite loss; the message carries the diagnostic dump.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Broken internal invariant (e.g. a tape node referencing a later node).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dimosr
