#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "r2ccp/conformal.hpp"
#include "r2ccp/data.hpp"
#include "r2ccp/evalbench.hpp"
#include "r2ccp/grid.hpp"
#include "r2ccp/loss.hpp"
#include "r2ccp/model.hpp"
#include "r2ccp/serialize.hpp"

namespace r2ccp {

// Flat run configuration; the single source of every knob and the single
// seed all randomness derives from.
struct RunConfig {
  std::string dataset;  // generator name or "csv"
  std::string csv_path;
  std::string label_column = "y";
  std::int64_t n = 2000;
  std::uint64_t seed = 1;
  double train_frac = 0.4;
  double cal_frac = 0.4;
  double test_frac = 0.2;
  std::string standardize = "auto";  // auto | on | off
  int k_bins = 50;
  int hidden_dim = 64;
  int n_layers = 3;
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 32;
  int epochs = 60;
  std::string loss = "main";
  double p = 0.5;
  double tau = 0.2;
  double alpha = 0.1;
  std::string out_dir = "out";
  std::vector<double> alphas = {0.05, 0.1, 0.2, 0.4};
  std::vector<int> k_list = {2, 5, 10, 20, 50};
  std::vector<std::string> variants = {"main", "no_entropy", "mle", "mle_entropy"};

  void validate() const;
  bool standardize_on() const;  // "auto" resolves to on for csv, off otherwise
  std::string canonical_json() const;
  std::string stem() const;  // {dataset}_{variant}_{seed}_{alpha}

  ModelConfig model_config(int input_dim) const;
  OptimizerConfig optimizer_config() const;
  LossConfig loss_config() const;
  SplitSpec split_spec() const;
};

// config_path may be empty (defaults only); overrides_json is a flat JSON
// object applied on top (CLI flags). Unknown keys are rejected in both.
RunConfig load_run_config(const std::string& config_path, const std::string& overrides_json);
RunConfig run_config_from_json(const std::string& json_text);

struct PreparedData {
  Splits splits;       // in model space (standardized when enabled)
  ScalerSet scalers;   // identity when standardization is off
  Grid grid;           // from TRAIN labels only
};

PreparedData prepare_data(const RunConfig& cfg);

// Output directory resolution honours the R2CCP_OUT_DIR environment override
// and creates the directory.
std::string resolve_out_dir(const RunConfig& cfg);

struct TrainOutput {
  std::string checkpoint_path;
  std::string loss_history_path;
  FitResult fit_result;
};

TrainOutput run_train(const RunConfig& cfg);

struct CalibrateOutput {
  std::string calibration_path;
  CalibrationResult calib;
};

// Data/model settings come from the checkpoint's embedded snapshot so the
// calibration split always matches the training run; alpha comes from cfg.
CalibrateOutput run_calibrate(const std::string& checkpoint_path, double alpha,
                              const std::string& out_dir_override = "");

// One prediction line per row: "lo,hi;lo,hi" in original label units, or
// the literal token EMPTY.
std::vector<std::string> run_predict(const std::string& checkpoint_path,
                                     const std::string& calibration_path,
                                     const Dataset& features_raw);

struct EvaluateOutput {
  std::string report_csv_path;
  std::string summary_path;
  std::string curve_csv_path;
  TrainOutput train;
  CalibrateOutput calibrate;
  EvalReport report;
};

EvaluateOutput run_evaluate(const RunConfig& cfg);

std::string run_sweep_alpha(const RunConfig& cfg);  // returns CSV path
std::string run_sweep_bins(const RunConfig& cfg);
std::string run_ablate(const RunConfig& cfg);
std::string run_gen_data(const RunConfig& cfg, const std::string& out_path);

std::string format_prediction_line(const PredictionSet& set, const LabelScaler& ls);

}  // namespace r2ccp
