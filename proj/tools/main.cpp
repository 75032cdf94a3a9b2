// r2ccp: conformal regression-as-classification pipeline front-end.
//
// Subcommands: train, calibrate, predict, evaluate, sweep-alpha, sweep-bins,
// ablate, gen-data. Config comes from a flat JSON file; flags override file
// values; R2CCP_OUT_DIR overrides the output directory.
// Exit codes: 0 success, 1 usage/config error, 2 runtime error.

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "r2ccp/errors.hpp"
#include "r2ccp/pipeline.hpp"

namespace {

using nlohmann::json;

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> dataset, csv_path, label_column, standardize, loss, out_dir;
  std::optional<std::int64_t> n, seed;
  std::optional<int> k_bins, hidden_dim, n_layers, batch_size, epochs;
  std::optional<double> train_frac, cal_frac, test_frac;
  std::optional<double> learning_rate, weight_decay, p, tau, alpha;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "Flat JSON config file");
  cmd->add_option("--dataset", f.dataset, "Generator name or 'csv'");
  cmd->add_option("--csv-path", f.csv_path, "CSV file for dataset=csv");
  cmd->add_option("--label-column", f.label_column, "Label column name");
  cmd->add_option("--n", f.n, "Generated sample count");
  cmd->add_option("--seed", f.seed, "Top-level seed");
  cmd->add_option("--train-frac", f.train_frac, "Training fraction");
  cmd->add_option("--cal-frac", f.cal_frac, "Calibration fraction");
  cmd->add_option("--test-frac", f.test_frac, "Test fraction");
  cmd->add_option("--standardize", f.standardize, "auto|on|off");
  cmd->add_option("--k-bins", f.k_bins, "Number of bin midpoints");
  cmd->add_option("--hidden-dim", f.hidden_dim, "Hidden layer width");
  cmd->add_option("--n-layers", f.n_layers, "Number of affine layers");
  cmd->add_option("--learning-rate", f.learning_rate, "AdamW learning rate");
  cmd->add_option("--weight-decay", f.weight_decay, "AdamW weight decay");
  cmd->add_option("--batch-size", f.batch_size, "Mini-batch size");
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--loss", f.loss, "main|no_entropy|mle|mle_entropy");
  cmd->add_option("--p", f.p, "Distance exponent");
  cmd->add_option("--tau", f.tau, "Entropy weight");
  cmd->add_option("--alpha", f.alpha, "Miscoverage level");
  cmd->add_option("--out-dir", f.out_dir, "Output directory");
}

std::string overrides_json(const CommonFlags& f) {
  json o = json::object();
  if (f.dataset) o["dataset"] = *f.dataset;
  if (f.csv_path) o["csv_path"] = *f.csv_path;
  if (f.label_column) o["label_column"] = *f.label_column;
  if (f.n) o["n"] = *f.n;
  if (f.seed) o["seed"] = *f.seed;
  if (f.train_frac) o["train_frac"] = *f.train_frac;
  if (f.cal_frac) o["cal_frac"] = *f.cal_frac;
  if (f.test_frac) o["test_frac"] = *f.test_frac;
  if (f.standardize) o["standardize"] = *f.standardize;
  if (f.k_bins) o["k_bins"] = *f.k_bins;
  if (f.hidden_dim) o["hidden_dim"] = *f.hidden_dim;
  if (f.n_layers) o["n_layers"] = *f.n_layers;
  if (f.learning_rate) o["learning_rate"] = *f.learning_rate;
  if (f.weight_decay) o["weight_decay"] = *f.weight_decay;
  if (f.batch_size) o["batch_size"] = *f.batch_size;
  if (f.epochs) o["epochs"] = *f.epochs;
  if (f.loss) o["loss"] = *f.loss;
  if (f.p) o["p"] = *f.p;
  if (f.tau) o["tau"] = *f.tau;
  if (f.alpha) o["alpha"] = *f.alpha;
  if (f.out_dir) o["out_dir"] = *f.out_dir;
  return o.dump();
}

r2ccp::RunConfig resolve_config(const CommonFlags& f) {
  return r2ccp::load_run_config(f.config_path, overrides_json(f));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal prediction via regression-as-classification"};
  app.require_subcommand(1);

  CommonFlags train_f, evaluate_f, sweep_alpha_f, sweep_bins_f, ablate_f, gen_f;

  CLI::App* train_cmd = app.add_subcommand("train", "Train a density model; write checkpoint");
  add_common_flags(train_cmd, train_f);

  CLI::App* calibrate_cmd =
      app.add_subcommand("calibrate", "Calibrate a checkpoint on its calibration split");
  std::string cal_checkpoint;
  double cal_alpha = 0.0;
  std::string cal_out_dir;
  calibrate_cmd->add_option("--checkpoint", cal_checkpoint, "Model checkpoint path")
      ->required();
  calibrate_cmd->add_option("--alpha", cal_alpha,
                            "Miscoverage level (default: the checkpoint's)");
  calibrate_cmd->add_option("--out-dir", cal_out_dir, "Output directory override");

  CLI::App* predict_cmd = app.add_subcommand("predict", "Emit prediction sets for inputs");
  std::string pred_checkpoint, pred_calibration, pred_csv;
  std::vector<std::string> pred_x;
  predict_cmd->add_option("--checkpoint", pred_checkpoint, "Model checkpoint path")
      ->required();
  predict_cmd->add_option("--calibration", pred_calibration, "Calibration file path")
      ->required();
  predict_cmd->add_option("--csv", pred_csv, "Feature-only CSV (header + numeric rows)");
  predict_cmd->add_option("--x", pred_x, "Comma-separated feature vector (repeatable)");

  CLI::App* evaluate_cmd =
      app.add_subcommand("evaluate", "Full pipeline: train, calibrate, report");
  add_common_flags(evaluate_cmd, evaluate_f);

  CLI::App* sweep_alpha_cmd =
      app.add_subcommand("sweep-alpha", "Recalibrate one model across alphas");
  add_common_flags(sweep_alpha_cmd, sweep_alpha_f);

  CLI::App* sweep_bins_cmd = app.add_subcommand("sweep-bins", "Retrain across bin counts");
  add_common_flags(sweep_bins_cmd, sweep_bins_f);

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "Train every loss variant; tabulate");
  add_common_flags(ablate_cmd, ablate_f);

  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  add_common_flags(gen_cmd, gen_f);
  std::string gen_out;
  gen_cmd->add_option("--out", gen_out, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // --help exits 0; parse errors are usage errors
  }

  try {
    if (train_cmd->parsed()) {
      r2ccp::TrainOutput out = r2ccp::run_train(resolve_config(train_f));
      std::cout << "checkpoint: " << out.checkpoint_path << "\n"
                << "loss_history: " << out.loss_history_path << "\n";
      if (!out.fit_result.epoch_losses.empty())
        std::cout << "final_loss: " << out.fit_result.epoch_losses.back() << "\n";
    } else if (calibrate_cmd->parsed()) {
      r2ccp::CalibrateOutput out = r2ccp::run_calibrate(cal_checkpoint, cal_alpha, cal_out_dir);
      std::cout << "calibration: " << out.calibration_path << "\n"
                << "k_order: " << out.calib.k_order << "\n"
                << "threshold: " << out.calib.threshold << "\n";
    } else if (predict_cmd->parsed()) {
      if (pred_csv.empty() == pred_x.empty())
        throw r2ccp::ConfigError("predict: provide exactly one of --csv or --x");
      r2ccp::Dataset inputs;
      if (!pred_csv.empty()) {
        inputs = r2ccp::load_csv_features(pred_csv);
      } else {
        for (const std::string& spec : pred_x) {
          std::vector<double> row;
          std::size_t pos = 0;
          while (pos <= spec.size()) {
            std::size_t comma = spec.find(',', pos);
            std::string tok = spec.substr(pos, comma == std::string::npos ? std::string::npos
                                                                          : comma - pos);
            try {
              row.push_back(std::stod(tok));
            } catch (const std::exception&) {
              throw r2ccp::ConfigError("predict: bad feature value '" + tok + "'");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
          }
          if (inputs.dim == 0) inputs.dim = static_cast<int>(row.size());
          if (static_cast<int>(row.size()) != inputs.dim)
            throw r2ccp::ConfigError("predict: inconsistent feature vector lengths");
          inputs.features.insert(inputs.features.end(), row.begin(), row.end());
          inputs.labels.push_back(0.0);
        }
      }
      for (const std::string& line :
           r2ccp::run_predict(pred_checkpoint, pred_calibration, inputs))
        std::cout << line << "\n";
    } else if (evaluate_cmd->parsed()) {
      r2ccp::EvaluateOutput out = r2ccp::run_evaluate(resolve_config(evaluate_f));
      std::cout << "report: " << out.report_csv_path << "\n"
                << "summary: " << out.summary_path << "\n"
                << "coverage: " << out.report.coverage << "\n"
                << "mean_length: " << out.report.mean_length << "\n"
                << "singleton_fraction: " << out.report.singleton_fraction << "\n";
    } else if (sweep_alpha_cmd->parsed()) {
      std::cout << "sweep: " << r2ccp::run_sweep_alpha(resolve_config(sweep_alpha_f)) << "\n";
    } else if (sweep_bins_cmd->parsed()) {
      std::cout << "sweep: " << r2ccp::run_sweep_bins(resolve_config(sweep_bins_f)) << "\n";
    } else if (ablate_cmd->parsed()) {
      std::cout << "ablation: " << r2ccp::run_ablate(resolve_config(ablate_f)) << "\n";
    } else if (gen_cmd->parsed()) {
      std::cout << "dataset: " << r2ccp::run_gen_data(resolve_config(gen_f), gen_out) << "\n";
    }
  } catch (const r2ccp::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
