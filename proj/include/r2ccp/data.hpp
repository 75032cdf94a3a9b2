#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace r2ccp {

// Per-column affine transform: stored = (raw - shift) / scale.
struct AffineScaler {
  std::vector<double> shift;
  std::vector<double> scale;

  bool identity() const;
};

struct LabelScaler {
  double shift = 0.0;
  double scale = 1.0;

  bool identity() const { return shift == 0.0 && scale == 1.0; }
  double apply(double y) const { return (y - shift) / scale; }
  double invert(double y) const { return y * scale + shift; }
};

// Feature matrix (row-major n x d) with aligned labels and any scaling that
// has been applied to reach this representation.
struct Dataset {
  std::vector<double> features;
  std::vector<double> labels;
  int dim = 0;
  AffineScaler feature_scaler;  // empty vectors = identity
  LabelScaler label_scaler;

  std::size_t n() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

struct SplitSpec {
  double train_frac = 0.4;
  double cal_frac = 0.4;
  double test_frac = 0.2;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Splits {
  Dataset train;
  Dataset cal;
  Dataset test;
};

// Synthetic generators; deterministic functions of (n, seed).
Dataset gen_heteroscedastic(std::size_t n, std::uint64_t seed);
Dataset gen_bimodal(std::size_t n, std::uint64_t seed);
Dataset gen_lei_fork(std::size_t n, std::uint64_t seed);
Dataset gen_lognormal(std::size_t n, std::uint64_t seed);

Dataset make_dataset(const std::string& generator, std::size_t n, std::uint64_t seed);
bool is_known_generator(const std::string& name);

// Strict CSV ingestion: header row, comma separated, every cell numeric.
// Any missing or non-numeric cell aborts with a row/column-numbered error.
Dataset load_csv(const std::string& path, const std::string& label_column);
// Feature-only variant (prediction inputs): every column is a feature.
Dataset load_csv_features(const std::string& path);
void write_csv(const Dataset& ds, const std::string& path, const std::string& label_column);

// Z-scoring fitted on one dataset (the train split) and applied to others.
// Constant columns keep scale 1.
struct ScalerSet {
  AffineScaler features;
  LabelScaler label;
};

ScalerSet fit_scalers(const Dataset& train);
Dataset apply_scalers(const Dataset& ds, const ScalerSet& s);

Splits split(const Dataset& ds, const SplitSpec& spec);

}  // namespace r2ccp
