#include "r2ccp/evalbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "r2ccp/errors.hpp"

namespace r2ccp {

EvalReport evaluate_sets(const Dataset& test, const SetPredictor& sets,
                         const PointPredictor& points) {
  if (test.n() == 0) throw ConfigError("evaluate: empty test set");
  EvalReport report;
  report.records.reserve(test.n());
  std::size_t covered = 0, singletons = 0;
  double total_length = 0.0;
  for (std::size_t i = 0; i < test.n(); ++i) {
    ExampleRecord rec;
    rec.truth = test.labels[i];
    rec.set = sets(test.row(i));
    rec.point = points(test.row(i));
    rec.covered = rec.set.contains(rec.truth);
    rec.length = set_length(rec.set);
    covered += rec.covered ? 1 : 0;
    singletons += rec.set.singleton() ? 1 : 0;
    total_length += rec.length;
    report.records.push_back(std::move(rec));
  }
  auto n = static_cast<double>(test.n());
  report.coverage = static_cast<double>(covered) / n;
  report.singleton_fraction = static_cast<double>(singletons) / n;
  report.mean_length = total_length / n;
  return report;
}

EvalReport evaluate(const Model& m, const Grid& grid, const CalibrationResult& calib,
                    const Dataset& test) {
  return evaluate_sets(
      test, [&](std::span<const double> x) { return predict_set(m, grid, calib, x); },
      [&](std::span<const double> x) {
        return point_predict(m.forward(grid, x), PointMode::expectation);
      });
}

EvalReport evaluate_baseline(const Model& reg, const CalibrationResult& calib,
                             const Dataset& test) {
  return evaluate_sets(
      test, [&](std::span<const double> x) { return baseline_predict(reg, calib, x); },
      [&](std::span<const double> x) { return predict_scalar(reg, x); });
}

std::vector<AlphaRecord> alpha_sweep(const Model& m, const Grid& grid, const Dataset& cal,
                                     const Dataset& test, std::span<const double> alphas) {
  if (alphas.empty()) throw ConfigError("alpha_sweep: empty alpha list");
  if (!std::is_sorted(alphas.begin(), alphas.end()))
    throw ConfigError("alpha_sweep: alphas must be sorted ascending");
  std::vector<double> scores = conformity_scores(m, grid, cal);
  std::vector<AlphaRecord> out;
  out.reserve(alphas.size());
  for (double alpha : alphas) {
    AlphaRecord rec;
    rec.alpha = alpha;
    rec.calib = calibrate(scores, alpha);
    rec.report = evaluate(m, grid, rec.calib, test);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<BinRecord> bin_count_sweep(const Splits& splits, const ModelConfig& arch,
                                       const OptimizerConfig& opt, const LossConfig& loss,
                                       double alpha, std::span<const int> k_list) {
  if (k_list.empty()) throw ConfigError("bin_count_sweep: empty K list");
  std::vector<BinRecord> out;
  out.reserve(k_list.size());
  auto [lo, hi] = std::minmax_element(splits.train.labels.begin(), splits.train.labels.end());
  for (int k : k_list) {
    if (k < 2) throw ConfigError("bin_count_sweep: every K must be >= 2");
    Grid grid = build_grid(*lo, *hi, k);
    ModelConfig cfg = arch;
    cfg.input_dim = splits.train.dim;
    cfg.k_bins = k;
    Model m(cfg);
    fit(m, splits.train, grid, loss, opt);
    CalibrationResult calib = calibrate(conformity_scores(m, grid, splits.cal), alpha);
    EvalReport report = evaluate(m, grid, calib, splits.test);
    out.push_back({k, report.coverage, report.mean_length});
  }
  return out;
}

std::vector<AblationRecord> ablation_run(const Splits& splits, const ModelConfig& arch,
                                         const OptimizerConfig& opt, double p, double tau,
                                         double alpha, std::span<const LossVariant> variants) {
  if (variants.empty()) throw ConfigError("ablation_run: empty variant list");
  auto [lo, hi] = std::minmax_element(splits.train.labels.begin(), splits.train.labels.end());
  Grid grid = build_grid(*lo, *hi, arch.k_bins);
  std::vector<AblationRecord> out;
  out.reserve(variants.size());
  for (LossVariant variant : variants) {
    LossConfig loss;
    loss.variant = variant;
    loss.p = p;
    loss.tau = tau;
    ModelConfig cfg = arch;
    cfg.input_dim = splits.train.dim;
    Model m(cfg);
    fit(m, splits.train, grid, loss, opt);
    CalibrationResult calib = calibrate(conformity_scores(m, grid, splits.cal), alpha);
    EvalReport report = evaluate(m, grid, calib, splits.test);
    out.push_back({variant, report.coverage, report.mean_length,
                   mean_predictive_entropy(m, grid, splits.test)});
  }
  return out;
}

double mean_predictive_entropy(const Model& m, const Grid& grid, const Dataset& ds) {
  if (ds.n() == 0) throw ConfigError("mean_predictive_entropy: empty dataset");
  double total = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i)
    total += entropy(m.forward(grid, ds.row(i)).probs());
  return total / static_cast<double>(ds.n());
}

namespace {

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> v) {
  std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double mean_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  auto n = static_cast<double>(a.size());
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("spearman: length mismatch");
  if (a.size() < 2) throw ConfigError("spearman: need at least 2 pairs");
  std::vector<double> ra = average_ranks(a);
  std::vector<double> rb = average_ranks(b);
  return pearson(ra, rb);
}

double residual_length_correlation(const EvalReport& report) {
  if (report.records.size() < 10)
    throw ConfigError("residual_length_correlation: need at least 10 examples");
  std::vector<double> residuals, lengths;
  residuals.reserve(report.records.size());
  lengths.reserve(report.records.size());
  for (const ExampleRecord& rec : report.records) {
    residuals.push_back(std::abs(rec.point - rec.truth));
    lengths.push_back(rec.length);
  }
  return spearman(residuals, lengths);
}

std::vector<CurvePoint> emit_density_curve(const Model& m, const Grid& grid,
                                           std::span<const double> x, int m_points) {
  if (m_points < 2) throw ConfigError("emit_density_curve: need at least 2 points");
  DiscreteDensity d = m.forward(grid, x);
  std::vector<CurvePoint> curve;
  curve.reserve(m_points);
  double step = (grid.y_max - grid.y_min) / static_cast<double>(m_points - 1);
  for (int i = 0; i < m_points; ++i) {
    double z = i + 1 == m_points ? grid.y_max : grid.y_min + step * i;
    curve.push_back({z, interpolate(d, z)});
  }
  return curve;
}

namespace {

std::string format_interval_list(const PredictionSet& set) {
  if (set.empty()) return "EMPTY";
  std::string out;
  char buf[80];
  for (std::size_t i = 0; i < set.intervals.size(); ++i) {
    if (i) out += ';';
    std::snprintf(buf, sizeof buf, "%.17g:%.17g", set.intervals[i].lo, set.intervals[i].hi);
    out += buf;
  }
  return out;
}

}  // namespace

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("report: cannot write '" + path + "'");
  out << "example,truth,point,residual,covered,singleton,length,set\n";
  char buf[200];
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    const ExampleRecord& rec = report.records[i];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%d,%d,%.17g,", i, rec.truth,
                  rec.point, std::abs(rec.point - rec.truth), rec.covered ? 1 : 0,
                  rec.set.singleton() ? 1 : 0, rec.length);
    out << buf << format_interval_list(rec.set) << "\n";
  }
  if (!out) throw IoError("report: write failed for '" + path + "'");
}

void write_report_summary(const EvalReport& report, const std::string& path) {
  nlohmann::json j;
  j["coverage"] = report.coverage;
  j["mean_length"] = report.mean_length;
  j["singleton_fraction"] = report.singleton_fraction;
  j["n_test"] = report.records.size();
  j["seed"] = report.seed;
  if (!report.config_json.empty()) j["config"] = nlohmann::json::parse(report.config_json);
  std::ofstream out(path);
  if (!out) throw IoError("report: cannot write '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("report: write failed for '" + path + "'");
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("curve: cannot write '" + path + "'");
  out << "z,score\n";
  char buf[80];
  for (const CurvePoint& p : curve) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.z, p.score);
    out << buf;
  }
  if (!out) throw IoError("curve: write failed for '" + path + "'");
}

}  // namespace r2ccp
