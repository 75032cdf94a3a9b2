#pragma once

#include <stdexcept>
#include <string>

namespace r2ccp {

// Bad user-supplied configuration or CLI input.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf appeared in a loss, gradient, or parameter during training.
struct TrainingDivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File could not be read/written or has an unexpected format.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Artifacts from different runs refused to combine (hash mismatch).
struct ArtifactMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace r2ccp
