#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "r2ccp/data.hpp"
#include "r2ccp/errors.hpp"
#include "r2ccp/pipeline.hpp"
#include "r2ccp/serialize.hpp"

using namespace r2ccp;
namespace fs = std::filesystem;

namespace {

int temp_counter = 0;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("r2ccp_pipe_test_" + std::to_string(::getpid()) + "_" + std::to_string(temp_counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunConfig quick_config(const std::string& out_dir) {
  RunConfig cfg;
  cfg.dataset = "lei_fork";
  cfg.n = 300;
  cfg.seed = 7;
  cfg.hidden_dim = 8;
  cfg.n_layers = 2;
  cfg.k_bins = 8;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 3;
  cfg.out_dir = out_dir;
  return cfg;
}

}  // namespace

TEST_CASE("run_config_from_json applies defaults and rejects junk") {
  RunConfig cfg = run_config_from_json("{\"dataset\":\"lei_fork\"}");
  CHECK(cfg.dataset == "lei_fork");
  CHECK(cfg.n == 2000);
  CHECK(cfg.seed == 1);
  CHECK(cfg.k_bins == 50);
  CHECK(cfg.hidden_dim == 64);
  CHECK(cfg.n_layers == 3);
  CHECK(cfg.epochs == 60);
  CHECK(cfg.loss == "main");
  CHECK(cfg.p == 0.5);
  CHECK(cfg.tau == 0.2);
  CHECK(cfg.alpha == 0.1);
  CHECK(cfg.train_frac == 0.4);
  CHECK(cfg.standardize == "auto");

  CHECK_THROWS_WITH_AS(run_config_from_json("{\"dataset\":\"lei_fork\",\"bogus\":1}"),
                       doctest::Contains("unknown key 'bogus'"), ConfigError);
  CHECK_THROWS_WITH_AS(run_config_from_json("{}"), doctest::Contains("'dataset' is required"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(run_config_from_json("{\"dataset\":\"made_up\"}"),
                       doctest::Contains("unknown dataset"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json("{\"dataset\":\"lei_fork\",\"n\":\"many\"}"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json("{\"dataset\":\"lei_fork\",\"seed\":-4}"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json("{\"dataset\":\"lei_fork\",\"alpha\":1.5}"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json("{\"dataset\":\"lei_fork\",\"alphas\":0.1}"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json("{\"dataset\":\"lei_fork\",\"alphas\":[0.2,0.1]}"),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_json("{\"dataset\":\"lei_fork\",\"k_list\":[1]}"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json("{\"dataset\":\"lei_fork\",\"variants\":[\"huber\"]}"),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_json("{\"dataset\":\"csv\"}"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json("not json at all"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json("[1,2,3]"), ConfigError);
}

TEST_CASE("load_run_config layers overrides on top of the file") {
  TempDir tmp;
  std::string path = tmp.file("run.json");
  {
    std::ofstream out(path);
    out << "{\"dataset\":\"lei_fork\",\"alpha\":0.2,\"epochs\":3}";
  }
  RunConfig cfg = load_run_config(path, "{\"alpha\":0.3}");
  CHECK(cfg.alpha == 0.3);
  CHECK(cfg.epochs == 3);
  CHECK(cfg.dataset == "lei_fork");

  RunConfig plain = load_run_config(path, "");
  CHECK(plain.alpha == 0.2);

  RunConfig no_file = load_run_config("", "{\"dataset\":\"heteroscedastic\",\"n\":500}");
  CHECK(no_file.dataset == "heteroscedastic");
  CHECK(no_file.n == 500);

  CHECK_THROWS_AS(load_run_config(tmp.file("missing.json"), ""), ConfigError);
  CHECK_THROWS_AS(load_run_config(path, "{\"mystery\":1}"), ConfigError);
}

TEST_CASE("canonical config snapshot ignores out_dir and round-trips") {
  RunConfig a = quick_config("/tmp/somewhere_a");
  RunConfig b = quick_config("/tmp/somewhere_b");
  CHECK(a.canonical_json() == b.canonical_json());

  RunConfig reparsed = run_config_from_json(a.canonical_json());
  CHECK(reparsed.canonical_json() == a.canonical_json());

  RunConfig c = quick_config("/tmp/somewhere_a");
  c.alpha = 0.2;
  CHECK(c.canonical_json() != a.canonical_json());
}

TEST_CASE("stem encodes dataset, loss, seed, and alpha") {
  RunConfig cfg;
  cfg.dataset = "lei_fork";
  cfg.loss = "main";
  cfg.seed = 7;
  cfg.alpha = 0.1;
  CHECK(cfg.stem() == "lei_fork_main_7_0.1");

  cfg.alpha = 0.05;
  cfg.loss = "no_entropy";
  cfg.seed = 12;
  CHECK(cfg.stem() == "lei_fork_no_entropy_12_0.05");

  cfg.dataset = "csv";
  cfg.csv_path = "/data/runs/housing.csv";
  cfg.alpha = 0.1;
  CHECK(cfg.stem() == "housing_no_entropy_12_0.1");
}

TEST_CASE("prepare_data derives the grid from train labels only") {
  RunConfig cfg = quick_config("unused");
  PreparedData data = prepare_data(cfg);

  CHECK(data.splits.train.n() == 120);  // floor(0.4 * 300)
  CHECK(data.splits.cal.n() == 120);
  CHECK(data.splits.test.n() == 60);

  double lo = data.splits.train.labels[0], hi = lo;
  for (double y : data.splits.train.labels) {
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  CHECK(data.grid.y_min == lo);
  CHECK(data.grid.y_max == hi);
  CHECK(data.grid.k_bins == 8);

  // Synthetic data defaults to no standardization: identity scalers.
  CHECK(data.scalers.label.identity());
  CHECK(data.scalers.features.shift == std::vector<double>{0.0});
  CHECK(data.scalers.features.scale == std::vector<double>{1.0});

  // Forcing standardization on z-scores the train labels.
  cfg.standardize = "on";
  PreparedData scaled = prepare_data(cfg);
  CHECK(!scaled.scalers.label.identity());
  double mean = 0.0;
  for (double y : scaled.splits.train.labels) mean += y;
  mean /= static_cast<double>(scaled.splits.train.n());
  CHECK(std::abs(mean) < 1e-9);
}

TEST_CASE("csv datasets standardize by default under auto") {
  TempDir tmp;
  Dataset ds = gen_heteroscedastic(200, 3);
  std::string csv = tmp.file("data.csv");
  write_csv(ds, csv, "y");

  RunConfig cfg;
  cfg.dataset = "csv";
  cfg.csv_path = csv;
  cfg.k_bins = 8;
  cfg.epochs = 1;
  cfg.out_dir = tmp.file("out");
  CHECK(cfg.standardize_on());
  PreparedData data = prepare_data(cfg);
  CHECK(!data.scalers.label.identity());
}

TEST_CASE("format_prediction_line inverts the label scaler") {
  PredictionSet s;
  s.intervals.push_back({0.0, 1.0});
  s.intervals.push_back({2.0, 2.5});
  LabelScaler ls{2.0, 3.0};  // raw = stored * 3 + 2
  CHECK(format_prediction_line(s, ls) == "2,5;8,9.5");

  PredictionSet empty;
  CHECK(format_prediction_line(empty, ls) == "EMPTY");

  LabelScaler identity;
  CHECK(format_prediction_line(s, identity) == "0,1;2,2.5");
}

TEST_CASE("train, calibrate, and predict chain through artifacts on disk") {
  TempDir tmp;
  RunConfig cfg = quick_config(tmp.file("out"));

  TrainOutput t = run_train(cfg);
  CHECK(fs::exists(t.checkpoint_path));
  CHECK(fs::exists(t.loss_history_path));
  CHECK(fs::path(t.checkpoint_path).filename().string() == "lei_fork_main_7_0.1.ckpt");
  REQUIRE(t.fit_result.epoch_losses.size() == 3);

  std::string loss_csv = slurp(t.loss_history_path);
  CHECK(loss_csv.rfind("epoch,loss\n", 0) == 0);
  std::size_t lines = 0;
  for (char ch : loss_csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 4);

  CalibrateOutput c = run_calibrate(t.checkpoint_path, 0.0);  // 0 keeps the embedded alpha
  CHECK(fs::exists(c.calibration_path));
  CHECK(c.calib.alpha == 0.1);
  CHECK(fs::path(c.calibration_path).parent_path() == fs::path(t.checkpoint_path).parent_path());

  CalibrationFile cf = load_calibration(c.calibration_path);
  CHECK(cf.model_hash == file_hash(t.checkpoint_path));
  CHECK(cf.calib.threshold == c.calib.threshold);

  // Alpha override recalibrates the same artifacts.
  CalibrateOutput wide = run_calibrate(t.checkpoint_path, 0.4);
  CHECK(wide.calib.alpha == 0.4);
  CHECK(wide.calib.threshold >= c.calib.threshold);

  Dataset features;
  features.dim = 1;
  features.features = {-1.0, 0.0, 1.0};
  features.labels = {0.0, 0.0, 0.0};
  std::vector<std::string> lines_out = run_predict(t.checkpoint_path, c.calibration_path, features);
  REQUIRE(lines_out.size() == 3);
  for (const std::string& line : lines_out) {
    CHECK(!line.empty());
    if (line != "EMPTY") {
      CHECK(line.find(',') != std::string::npos);
      double lo = 0.0, hi = 0.0;
      CHECK(std::sscanf(line.c_str(), "%lf,%lf", &lo, &hi) == 2);
      CHECK(lo <= hi);
    }
  }

  Dataset wrong_dim;
  wrong_dim.dim = 2;
  wrong_dim.features = {0.0, 0.0};
  wrong_dim.labels = {0.0};
  CHECK_THROWS_AS(run_predict(t.checkpoint_path, c.calibration_path, wrong_dim), ConfigError);

  // A calibration produced against a different checkpoint is refused.
  RunConfig other = cfg;
  other.seed = 8;
  TrainOutput t2 = run_train(other);
  CalibrateOutput c2 = run_calibrate(t2.checkpoint_path, 0.0);
  CHECK_THROWS_AS(run_predict(t.checkpoint_path, c2.calibration_path, features),
                  ArtifactMismatchError);
}

TEST_CASE("identical configs reproduce identical artifacts regardless of out_dir") {
  TempDir tmp;
  RunConfig a = quick_config(tmp.file("a"));
  RunConfig b = quick_config(tmp.file("b"));
  TrainOutput ta = run_train(a);
  TrainOutput tb = run_train(b);
  CHECK(slurp(ta.checkpoint_path) == slurp(tb.checkpoint_path));
  CHECK(slurp(ta.loss_history_path) == slurp(tb.loss_history_path));
}

TEST_CASE("run_evaluate writes the full report bundle") {
  TempDir tmp;
  RunConfig cfg = quick_config(tmp.file("out"));
  EvaluateOutput ev = run_evaluate(cfg);
  CHECK(fs::exists(ev.report_csv_path));
  CHECK(fs::exists(ev.summary_path));
  CHECK(fs::exists(ev.curve_csv_path));
  CHECK(ev.report.records.size() == 60);
  CHECK(ev.report.coverage >= 0.0);
  CHECK(ev.report.coverage <= 1.0);

  std::string summary = slurp(ev.summary_path);
  CHECK(summary.find("\"n_test\": 60") != std::string::npos);
  CHECK(summary.find("\"seed\": 7") != std::string::npos);
  CHECK(summary.find("\"dataset\": \"lei_fork\"") != std::string::npos);

  std::string curve = slurp(ev.curve_csv_path);
  std::size_t lines = 0;
  for (char ch : curve)
    if (ch == '\n') ++lines;
  CHECK(lines == 201);  // header + 200 samples
}

TEST_CASE("sweeps and ablation write one CSV row per setting") {
  TempDir tmp;
  RunConfig cfg = quick_config(tmp.file("out"));
  cfg.alphas = {0.1, 0.3};
  cfg.k_list = {2, 6};
  cfg.variants = {"main", "mle"};

  std::string alpha_csv = run_sweep_alpha(cfg);
  std::string alpha_text = slurp(alpha_csv);
  CHECK(alpha_text.rfind("alpha,coverage,mean_length,singleton_fraction\n", 0) == 0);
  std::size_t lines = 0;
  for (char ch : alpha_text)
    if (ch == '\n') ++lines;
  CHECK(lines == 3);

  std::string bins_csv = run_sweep_bins(cfg);
  std::string bins_text = slurp(bins_csv);
  CHECK(bins_text.rfind("k_bins,coverage,mean_length\n", 0) == 0);
  lines = 0;
  for (char ch : bins_text)
    if (ch == '\n') ++lines;
  CHECK(lines == 3);

  std::string ablate_csv = run_ablate(cfg);
  std::string ablate_text = slurp(ablate_csv);
  CHECK(ablate_text.rfind("variant,coverage,mean_length,mean_entropy\n", 0) == 0);
  CHECK(ablate_text.find("main,") != std::string::npos);
  CHECK(ablate_text.find("mle,") != std::string::npos);
}

TEST_CASE("gen-data output reloads as the same dataset") {
  TempDir tmp;
  RunConfig cfg;
  cfg.dataset = "bimodal";
  cfg.n = 40;
  cfg.seed = 5;
  cfg.out_dir = tmp.file("out");
  std::string path = run_gen_data(cfg, tmp.file("bimodal.csv"));
  Dataset back = load_csv(path, "y");
  Dataset direct = gen_bimodal(40, 5);
  REQUIRE(back.n() == 40);
  CHECK(back.dim == 4);
  for (std::size_t i = 0; i < back.n(); ++i)
    CHECK(back.labels[i] == doctest::Approx(direct.labels[i]).epsilon(1e-15));
}

TEST_CASE("R2CCP_OUT_DIR overrides the configured output directory") {
  TempDir tmp;
  RunConfig cfg = quick_config(tmp.file("configured"));
  std::string forced = tmp.file("forced");
  ::setenv("R2CCP_OUT_DIR", forced.c_str(), 1);
  std::string dir = resolve_out_dir(cfg);
  ::unsetenv("R2CCP_OUT_DIR");
  CHECK(dir == forced);
  CHECK(fs::exists(forced));
  CHECK(resolve_out_dir(cfg) == tmp.file("configured"));
}
