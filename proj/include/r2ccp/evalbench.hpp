#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "r2ccp/conformal.hpp"
#include "r2ccp/data.hpp"
#include "r2ccp/density.hpp"
#include "r2ccp/grid.hpp"
#include "r2ccp/loss.hpp"
#include "r2ccp/model.hpp"

namespace r2ccp {

struct ExampleRecord {
  double truth = 0.0;
  double point = 0.0;
  PredictionSet set;
  bool covered = false;
  double length = 0.0;
};

// Everything is in the label units the model saw (post-standardization when
// standardization is on).
struct EvalReport {
  double coverage = 0.0;
  double mean_length = 0.0;
  double singleton_fraction = 0.0;
  std::vector<ExampleRecord> records;
  std::uint64_t seed = 0;
  std::string config_json;  // canonical run-config snapshot
};

using SetPredictor = std::function<PredictionSet(std::span<const double>)>;
using PointPredictor = std::function<double(std::span<const double>)>;

EvalReport evaluate_sets(const Dataset& test, const SetPredictor& sets,
                         const PointPredictor& points);
EvalReport evaluate(const Model& m, const Grid& grid, const CalibrationResult& calib,
                    const Dataset& test);
EvalReport evaluate_baseline(const Model& reg, const CalibrationResult& calib,
                             const Dataset& test);

struct AlphaRecord {
  double alpha = 0.0;
  CalibrationResult calib;
  EvalReport report;
};

// Recalibrates the same trained model per alpha; no retraining.
std::vector<AlphaRecord> alpha_sweep(const Model& m, const Grid& grid, const Dataset& cal,
                                     const Dataset& test, std::span<const double> alphas);

struct BinRecord {
  int k_bins = 0;
  double coverage = 0.0;
  double mean_length = 0.0;
};

// Retrains per K with the same seed and splits.
std::vector<BinRecord> bin_count_sweep(const Splits& splits, const ModelConfig& arch,
                                       const OptimizerConfig& opt, const LossConfig& loss,
                                       double alpha, std::span<const int> k_list);

struct AblationRecord {
  LossVariant variant = LossVariant::main;
  double coverage = 0.0;
  double mean_length = 0.0;
  double mean_entropy = 0.0;
};

// Trains one model per loss variant with shared seed/splits/grid.
std::vector<AblationRecord> ablation_run(const Splits& splits, const ModelConfig& arch,
                                         const OptimizerConfig& opt, double p, double tau,
                                         double alpha, std::span<const LossVariant> variants);

double mean_predictive_entropy(const Model& m, const Grid& grid, const Dataset& ds);

// Spearman rank correlation with average ranks on ties; 0 when either side
// has zero variance.
double spearman(std::span<const double> a, std::span<const double> b);

// Spearman between |point - truth| and set length.
double residual_length_correlation(const EvalReport& report);

struct CurvePoint {
  double z = 0.0;
  double score = 0.0;
};

std::vector<CurvePoint> emit_density_curve(const Model& m, const Grid& grid,
                                           std::span<const double> x, int m_points);

void write_report_csv(const EvalReport& report, const std::string& path);
void write_report_summary(const EvalReport& report, const std::string& path);
void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path);

}  // namespace r2ccp
