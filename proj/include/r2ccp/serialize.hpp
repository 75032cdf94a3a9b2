#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "r2ccp/conformal.hpp"
#include "r2ccp/data.hpp"
#include "r2ccp/grid.hpp"
#include "r2ccp/model.hpp"

namespace r2ccp {

// Everything a prediction needs, in one versioned little-endian binary file.
// Round-trips are bit-exact; optimizer moments are deliberately not stored.
struct Checkpoint {
  std::string config_json;  // canonical run-config snapshot
  ModelConfig model_cfg;
  Grid grid;
  AffineScaler feature_scaler;
  LabelScaler label_scaler;
  std::vector<Layer> layers;  // only w/b are persisted
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const Model& m, const Grid& grid, const AffineScaler& fs,
                           const LabelScaler& ls, const std::string& config_json);
Model model_from_checkpoint(const Checkpoint& ckpt);

// Calibration artifact; model_hash ties it to the exact checkpoint bytes it
// was computed against.
struct CalibrationFile {
  std::string config_json;
  std::uint64_t model_hash = 0;
  CalibrationResult calib;
};

void save_calibration(const CalibrationFile& cf, const std::string& path);
CalibrationFile load_calibration(const std::string& path);

std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t file_hash(const std::string& path);

}  // namespace r2ccp
