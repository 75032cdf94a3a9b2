#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "r2ccp/data.hpp"
#include "r2ccp/density.hpp"
#include "r2ccp/grid.hpp"
#include "r2ccp/model.hpp"

namespace r2ccp {

// Split-conformal calibration summary. threshold is the k_order-th smallest
// score (1-based); k_order == 0 marks the vacuous regime (threshold -inf,
// full-range sets).
struct CalibrationResult {
  std::vector<double> scores;  // ascending
  double alpha = 0.0;
  double threshold = 0.0;
  int k_order = 0;

  std::size_t n_cal() const { return scores.size(); }
};

// Interpolated predicted density at the true label, one per example.
std::vector<double> conformity_scores(const Model& m, const Grid& grid, const Dataset& cal);

CalibrationResult calibrate(std::vector<double> scores, double alpha);

PredictionSet predict_set(const DiscreteDensity& d, const CalibrationResult& calib);
PredictionSet predict_set(const Model& m, const Grid& grid, const CalibrationResult& calib,
                          std::span<const double> x);

// Constant-width comparison arm: the same backbone trained as a scalar mean
// regressor, conformalized on negative absolute residuals.
Model fit_baseline_regressor(const Dataset& train, const ModelConfig& arch,
                             const OptimizerConfig& opt);
CalibrationResult calibrate_baseline(const Model& reg, const Dataset& cal, double alpha);
PredictionSet baseline_predict(const Model& reg, const CalibrationResult& calib,
                               std::span<const double> x);

// Simulates exchangeable uniform scores through the calibrate rule and
// returns the fraction of trials whose held-out score clears the threshold.
double coverage_mc_check(int n_cal, double alpha, int trials, std::uint64_t seed);

}  // namespace r2ccp
