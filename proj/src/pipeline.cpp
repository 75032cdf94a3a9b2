#include "r2ccp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "r2ccp/errors.hpp"

namespace r2ccp {

namespace {

using nlohmann::json;

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Canonical snapshot: every science-relevant key. out_dir is deliberately
// excluded so artifact bytes do not depend on where they are written.
json config_to_json(const RunConfig& c) {
  json j;
  j["dataset"] = c.dataset;
  j["csv_path"] = c.csv_path;
  j["label_column"] = c.label_column;
  j["n"] = c.n;
  j["seed"] = c.seed;
  j["train_frac"] = c.train_frac;
  j["cal_frac"] = c.cal_frac;
  j["test_frac"] = c.test_frac;
  j["standardize"] = c.standardize;
  j["k_bins"] = c.k_bins;
  j["hidden_dim"] = c.hidden_dim;
  j["n_layers"] = c.n_layers;
  j["learning_rate"] = c.learning_rate;
  j["weight_decay"] = c.weight_decay;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["loss"] = c.loss;
  j["p"] = c.p;
  j["tau"] = c.tau;
  j["alpha"] = c.alpha;
  j["alphas"] = c.alphas;
  j["k_list"] = c.k_list;
  j["variants"] = c.variants;
  return j;
}

double as_double(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config: key '" + key + "' must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config: key '" + key + "' must be an integer");
  return v.get<int>();
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config: key '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

void RunConfig::validate() const {
  if (dataset.empty()) throw ConfigError("config: 'dataset' is required");
  if (dataset == "csv") {
    if (csv_path.empty()) throw ConfigError("config: dataset 'csv' requires 'csv_path'");
  } else if (!is_known_generator(dataset)) {
    throw ConfigError("config: unknown dataset '" + dataset + "'");
  }
  if (n < 2) throw ConfigError("config: 'n' must be >= 2");
  if (standardize != "auto" && standardize != "on" && standardize != "off")
    throw ConfigError("config: 'standardize' must be auto, on, or off");
  if (k_bins < 2) throw ConfigError("config: 'k_bins' must be >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("config: 'alpha' must be in (0,1)");
  split_spec().validate();
  model_config(1).validate();
  optimizer_config().validate();
  loss_config().validate();
  if (alphas.empty()) throw ConfigError("config: 'alphas' must be nonempty");
  if (!std::is_sorted(alphas.begin(), alphas.end()))
    throw ConfigError("config: 'alphas' must be sorted ascending");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("config: every alpha must be in (0,1)");
  if (k_list.empty()) throw ConfigError("config: 'k_list' must be nonempty");
  for (int k : k_list)
    if (k < 2) throw ConfigError("config: every K in 'k_list' must be >= 2");
  if (variants.empty()) throw ConfigError("config: 'variants' must be nonempty");
  for (const std::string& v : variants) loss_variant_from_string(v);  // throws on junk
}

bool RunConfig::standardize_on() const {
  if (standardize == "on") return true;
  if (standardize == "off") return false;
  return dataset == "csv";
}

std::string RunConfig::canonical_json() const {
  return config_to_json(*this).dump();
}

std::string RunConfig::stem() const {
  std::string name = dataset;
  if (dataset == "csv") {
    std::string base = std::filesystem::path(csv_path).stem().string();
    name = base.empty() ? "csv" : base;
  }
  return name + "_" + loss + "_" + std::to_string(seed) + "_" + format_g(alpha);
}

ModelConfig RunConfig::model_config(int input_dim) const {
  ModelConfig mc;
  mc.input_dim = input_dim;
  mc.hidden_dim = hidden_dim;
  mc.n_layers = n_layers;
  mc.k_bins = k_bins;
  mc.seed = seed;
  return mc;
}

OptimizerConfig RunConfig::optimizer_config() const {
  OptimizerConfig oc;
  oc.learning_rate = learning_rate;
  oc.weight_decay = weight_decay;
  oc.beta1 = beta1;
  oc.beta2 = beta2;
  oc.epsilon = epsilon;
  oc.batch_size = batch_size;
  oc.epochs = epochs;
  return oc;
}

LossConfig RunConfig::loss_config() const {
  LossConfig lc;
  lc.variant = loss_variant_from_string(loss);
  lc.p = p;
  lc.tau = tau;
  return lc;
}

SplitSpec RunConfig::split_spec() const {
  SplitSpec s;
  s.train_frac = train_frac;
  s.cal_frac = cal_frac;
  s.test_frac = test_frac;
  s.seed = seed;
  return s;
}

RunConfig run_config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");

  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "dataset") c.dataset = as_string(value, key);
    else if (key == "csv_path") c.csv_path = as_string(value, key);
    else if (key == "label_column") c.label_column = as_string(value, key);
    else if (key == "n") c.n = as_int(value, key);
    else if (key == "seed") {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0)
        throw ConfigError("config: key 'seed' must be a nonnegative integer");
      c.seed = value.get<std::uint64_t>();
    } else if (key == "train_frac") c.train_frac = as_double(value, key);
    else if (key == "cal_frac") c.cal_frac = as_double(value, key);
    else if (key == "test_frac") c.test_frac = as_double(value, key);
    else if (key == "standardize") c.standardize = as_string(value, key);
    else if (key == "k_bins") c.k_bins = as_int(value, key);
    else if (key == "hidden_dim") c.hidden_dim = as_int(value, key);
    else if (key == "n_layers") c.n_layers = as_int(value, key);
    else if (key == "learning_rate") c.learning_rate = as_double(value, key);
    else if (key == "weight_decay") c.weight_decay = as_double(value, key);
    else if (key == "beta1") c.beta1 = as_double(value, key);
    else if (key == "beta2") c.beta2 = as_double(value, key);
    else if (key == "epsilon") c.epsilon = as_double(value, key);
    else if (key == "batch_size") c.batch_size = as_int(value, key);
    else if (key == "epochs") c.epochs = as_int(value, key);
    else if (key == "loss") c.loss = as_string(value, key);
    else if (key == "p") c.p = as_double(value, key);
    else if (key == "tau") c.tau = as_double(value, key);
    else if (key == "alpha") c.alpha = as_double(value, key);
    else if (key == "out_dir") c.out_dir = as_string(value, key);
    else if (key == "alphas") {
      if (!value.is_array()) throw ConfigError("config: 'alphas' must be an array");
      c.alphas.clear();
      for (const auto& a : value) c.alphas.push_back(as_double(a, key));
    } else if (key == "k_list") {
      if (!value.is_array()) throw ConfigError("config: 'k_list' must be an array");
      c.k_list.clear();
      for (const auto& k : value) c.k_list.push_back(as_int(k, key));
    } else if (key == "variants") {
      if (!value.is_array()) throw ConfigError("config: 'variants' must be an array");
      c.variants.clear();
      for (const auto& v : value) c.variants.push_back(as_string(v, key));
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& config_path, const std::string& overrides_json) {
  json j = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("config: cannot open '" + config_path + "'");
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config: invalid JSON in '" + config_path + "': " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  }
  if (!overrides_json.empty()) {
    json o = json::parse(overrides_json);
    for (const auto& [key, value] : o.items()) j[key] = value;
  }
  return run_config_from_json(j.dump());
}

PreparedData prepare_data(const RunConfig& cfg) {
  cfg.validate();
  Dataset raw = cfg.dataset == "csv"
                    ? load_csv(cfg.csv_path, cfg.label_column)
                    : make_dataset(cfg.dataset, static_cast<std::size_t>(cfg.n), cfg.seed);
  PreparedData out;
  out.splits = split(raw, cfg.split_spec());
  if (cfg.standardize_on()) {
    out.scalers = fit_scalers(out.splits.train);
    out.splits.train = apply_scalers(out.splits.train, out.scalers);
    out.splits.cal = apply_scalers(out.splits.cal, out.scalers);
    out.splits.test = apply_scalers(out.splits.test, out.scalers);
  } else {
    out.scalers.features.shift.assign(raw.dim, 0.0);
    out.scalers.features.scale.assign(raw.dim, 1.0);
    out.scalers.label = LabelScaler{};
  }
  auto [lo, hi] =
      std::minmax_element(out.splits.train.labels.begin(), out.splits.train.labels.end());
  out.grid = build_grid(*lo, *hi, cfg.k_bins);
  return out;
}

std::string resolve_out_dir(const RunConfig& cfg) {
  std::string dir = cfg.out_dir;
  if (const char* env = std::getenv("R2CCP_OUT_DIR"); env && *env) dir = env;
  std::filesystem::create_directories(dir);
  return dir;
}

TrainOutput run_train(const RunConfig& cfg) {
  PreparedData data = prepare_data(cfg);
  Model m(cfg.model_config(data.splits.train.dim));
  FitResult fr = fit(m, data.splits.train, data.grid, cfg.loss_config(),
                     cfg.optimizer_config());
  if (fr.underflow_count > 0)
    std::cerr << "warning: " << fr.underflow_count
              << " sample losses hit the probability floor during training\n";

  std::string dir = resolve_out_dir(cfg);
  TrainOutput out;
  out.fit_result = fr;
  out.checkpoint_path = dir + "/" + cfg.stem() + ".ckpt";
  out.loss_history_path = dir + "/" + cfg.stem() + "_loss.csv";
  save_checkpoint(make_checkpoint(m, data.grid, data.scalers.features, data.scalers.label,
                                  cfg.canonical_json()),
                  out.checkpoint_path);
  std::ofstream loss_csv(out.loss_history_path);
  if (!loss_csv) throw IoError("cannot write '" + out.loss_history_path + "'");
  loss_csv << "epoch,loss\n";
  char buf[48];
  for (std::size_t e = 0; e < fr.epoch_losses.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e, fr.epoch_losses[e]);
    loss_csv << buf;
  }
  if (!loss_csv) throw IoError("write failed for '" + out.loss_history_path + "'");
  return out;
}

CalibrateOutput run_calibrate(const std::string& checkpoint_path, double alpha,
                              const std::string& out_dir_override) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  RunConfig cfg = run_config_from_json(ckpt.config_json);
  if (alpha > 0.0) cfg.alpha = alpha;

  // Rebuild the exact calibration split the checkpoint was trained against.
  Dataset raw = cfg.dataset == "csv"
                    ? load_csv(cfg.csv_path, cfg.label_column)
                    : make_dataset(cfg.dataset, static_cast<std::size_t>(cfg.n), cfg.seed);
  Splits splits = split(raw, cfg.split_spec());
  Dataset cal = cfg.standardize_on()
                    ? apply_scalers(splits.cal,
                                    ScalerSet{ckpt.feature_scaler, ckpt.label_scaler})
                    : splits.cal;

  Model m = model_from_checkpoint(ckpt);
  CalibrationResult calib = calibrate(conformity_scores(m, ckpt.grid, cal), cfg.alpha);
  if (calib.k_order == 0)
    std::cerr << "warning: n_cal too small for alpha " << cfg.alpha
              << "; coverage guarantee is vacuous (full-range sets)\n";

  // Default next to the checkpoint; R2CCP_OUT_DIR or the explicit override win.
  std::string dir = out_dir_override;
  if (const char* env = std::getenv("R2CCP_OUT_DIR"); env && *env) dir = env;
  if (dir.empty()) {
    dir = std::filesystem::path(checkpoint_path).parent_path().string();
    if (dir.empty()) dir = ".";
  }
  std::filesystem::create_directories(dir);
  CalibrateOutput out;
  out.calib = calib;
  out.calibration_path = dir + "/" + cfg.stem() + ".calib";
  CalibrationFile cf;
  cf.config_json = ckpt.config_json;
  cf.model_hash = file_hash(checkpoint_path);
  cf.calib = calib;
  save_calibration(cf, out.calibration_path);
  return out;
}

std::string format_prediction_line(const PredictionSet& set, const LabelScaler& ls) {
  if (set.empty()) return "EMPTY";
  std::string line;
  char buf[80];
  for (std::size_t i = 0; i < set.intervals.size(); ++i) {
    if (i) line += ';';
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", ls.invert(set.intervals[i].lo),
                  ls.invert(set.intervals[i].hi));
    line += buf;
  }
  return line;
}

std::vector<std::string> run_predict(const std::string& checkpoint_path,
                                     const std::string& calibration_path,
                                     const Dataset& features_raw) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  CalibrationFile cf = load_calibration(calibration_path);
  if (cf.model_hash != file_hash(checkpoint_path))
    throw ArtifactMismatchError(
        "calibration was computed against a different checkpoint; refusing to combine");
  if (features_raw.dim != ckpt.model_cfg.input_dim)
    throw ConfigError("predict: feature dimension does not match the checkpoint");

  Model m = model_from_checkpoint(ckpt);
  std::vector<std::string> lines;
  lines.reserve(features_raw.n());
  std::vector<double> x(features_raw.dim);
  for (std::size_t i = 0; i < features_raw.n(); ++i) {
    auto row = features_raw.row(i);
    for (int j = 0; j < features_raw.dim; ++j)
      x[j] = (row[j] - ckpt.feature_scaler.shift[j]) / ckpt.feature_scaler.scale[j];
    PredictionSet set = predict_set(m, ckpt.grid, cf.calib, x);
    lines.push_back(format_prediction_line(set, ckpt.label_scaler));
  }
  return lines;
}

EvaluateOutput run_evaluate(const RunConfig& cfg) {
  EvaluateOutput out;
  out.train = run_train(cfg);
  out.calibrate = run_calibrate(out.train.checkpoint_path, cfg.alpha);

  Checkpoint ckpt = load_checkpoint(out.train.checkpoint_path);
  Model m = model_from_checkpoint(ckpt);
  PreparedData data = prepare_data(cfg);
  out.report = evaluate(m, ckpt.grid, out.calibrate.calib, data.splits.test);
  out.report.seed = cfg.seed;
  out.report.config_json = cfg.canonical_json();

  std::string dir = resolve_out_dir(cfg);
  out.report_csv_path = dir + "/" + cfg.stem() + "_report.csv";
  out.summary_path = dir + "/" + cfg.stem() + "_summary.json";
  out.curve_csv_path = dir + "/" + cfg.stem() + "_curve.csv";
  write_report_csv(out.report, out.report_csv_path);
  write_report_summary(out.report, out.summary_path);
  write_curve_csv(emit_density_curve(m, ckpt.grid, data.splits.test.row(0), 200),
                  out.curve_csv_path);
  return out;
}

std::string run_sweep_alpha(const RunConfig& cfg) {
  PreparedData data = prepare_data(cfg);
  Model m(cfg.model_config(data.splits.train.dim));
  fit(m, data.splits.train, data.grid, cfg.loss_config(), cfg.optimizer_config());
  std::vector<AlphaRecord> records =
      alpha_sweep(m, data.grid, data.splits.cal, data.splits.test, cfg.alphas);

  std::string path = resolve_out_dir(cfg) + "/" + cfg.stem() + "_alpha_sweep.csv";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "alpha,coverage,mean_length,singleton_fraction\n";
  char buf[160];
  for (const AlphaRecord& r : records) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.alpha, r.report.coverage,
                  r.report.mean_length, r.report.singleton_fraction);
    out << buf;
  }
  if (!out) throw IoError("write failed for '" + path + "'");
  return path;
}

std::string run_sweep_bins(const RunConfig& cfg) {
  PreparedData data = prepare_data(cfg);
  std::vector<BinRecord> records =
      bin_count_sweep(data.splits, cfg.model_config(data.splits.train.dim),
                      cfg.optimizer_config(), cfg.loss_config(), cfg.alpha, cfg.k_list);

  std::string path = resolve_out_dir(cfg) + "/" + cfg.stem() + "_bin_sweep.csv";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "k_bins,coverage,mean_length\n";
  char buf[120];
  for (const BinRecord& r : records) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", r.k_bins, r.coverage, r.mean_length);
    out << buf;
  }
  if (!out) throw IoError("write failed for '" + path + "'");
  return path;
}

std::string run_ablate(const RunConfig& cfg) {
  PreparedData data = prepare_data(cfg);
  std::vector<LossVariant> variants;
  variants.reserve(cfg.variants.size());
  for (const std::string& v : cfg.variants) variants.push_back(loss_variant_from_string(v));
  std::vector<AblationRecord> records =
      ablation_run(data.splits, cfg.model_config(data.splits.train.dim),
                   cfg.optimizer_config(), cfg.p, cfg.tau, cfg.alpha, variants);

  std::string path = resolve_out_dir(cfg) + "/" + cfg.stem() + "_ablation.csv";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "variant,coverage,mean_length,mean_entropy\n";
  char buf[160];
  for (const AblationRecord& r : records) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g\n", r.coverage, r.mean_length,
                  r.mean_entropy);
    out << loss_variant_name(r.variant) << buf;
  }
  if (!out) throw IoError("write failed for '" + path + "'");
  return path;
}

std::string run_gen_data(const RunConfig& cfg, const std::string& out_path) {
  if (cfg.dataset == "csv")
    throw ConfigError("gen-data: 'dataset' must name a generator, not csv");
  Dataset ds = make_dataset(cfg.dataset, static_cast<std::size_t>(cfg.n), cfg.seed);
  std::string path = out_path;
  if (path.empty()) path = resolve_out_dir(cfg) + "/" + cfg.dataset + "_" +
                           std::to_string(cfg.seed) + ".csv";
  write_csv(ds, path, cfg.label_column);
  return path;
}

}  // namespace r2ccp
