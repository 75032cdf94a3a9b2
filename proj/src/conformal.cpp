#include "r2ccp/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "r2ccp/errors.hpp"
#include "r2ccp/rng.hpp"

namespace r2ccp {

namespace {

constexpr std::uint64_t kMcSalt = 0x6d636368ULL;  // "mcch"

}  // namespace

std::vector<double> conformity_scores(const Model& m, const Grid& grid, const Dataset& cal) {
  if (cal.dim != m.config().input_dim)
    throw ConfigError("conformity_scores: dataset dimension does not match model");
  std::vector<double> scores;
  scores.reserve(cal.n());
  for (std::size_t i = 0; i < cal.n(); ++i) {
    DiscreteDensity d = m.forward(grid, cal.row(i));
    scores.push_back(interpolate(d, cal.labels[i]));
  }
  return scores;
}

CalibrationResult calibrate(std::vector<double> scores, double alpha) {
  if (scores.empty()) throw ConfigError("calibrate: empty score vector");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("calibrate: alpha must be in (0,1)");
  for (double s : scores)
    if (!std::isfinite(s)) throw ConfigError("calibrate: non-finite conformity score");

  std::sort(scores.begin(), scores.end());
  auto n = static_cast<double>(scores.size());
  auto k = static_cast<long long>(std::floor(alpha * (n + 1.0)));

  CalibrationResult res;
  res.alpha = alpha;
  res.scores = std::move(scores);
  if (k < 1) {
    res.k_order = 0;
    res.threshold = -std::numeric_limits<double>::infinity();
  } else {
    res.k_order = static_cast<int>(std::min<long long>(k, res.scores.size()));
    res.threshold = res.scores[res.k_order - 1];
  }
  return res;
}

PredictionSet predict_set(const DiscreteDensity& d, const CalibrationResult& calib) {
  return superlevel_set(d, calib.threshold);
}

PredictionSet predict_set(const Model& m, const Grid& grid, const CalibrationResult& calib,
                          std::span<const double> x) {
  return predict_set(m.forward(grid, x), calib);
}

Model fit_baseline_regressor(const Dataset& train, const ModelConfig& arch,
                             const OptimizerConfig& opt) {
  ModelConfig cfg = arch;
  cfg.k_bins = 1;
  Model reg(cfg);
  fit_squared_error(reg, train, opt);
  return reg;
}

CalibrationResult calibrate_baseline(const Model& reg, const Dataset& cal, double alpha) {
  if (cal.dim != reg.config().input_dim)
    throw ConfigError("calibrate_baseline: dataset dimension does not match model");
  std::vector<double> scores;
  scores.reserve(cal.n());
  for (std::size_t i = 0; i < cal.n(); ++i)
    scores.push_back(-std::abs(cal.labels[i] - predict_scalar(reg, cal.row(i))));
  return calibrate(std::move(scores), alpha);
}

PredictionSet baseline_predict(const Model& reg, const CalibrationResult& calib,
                               std::span<const double> x) {
  double mu = predict_scalar(reg, x);
  double radius = -calib.threshold;  // scores are negative residuals
  PredictionSet set;
  set.threshold = calib.threshold;
  set.intervals.push_back({mu - radius, mu + radius});
  return set;
}

double coverage_mc_check(int n_cal, double alpha, int trials, std::uint64_t seed) {
  if (n_cal < 1) throw ConfigError("coverage_mc_check: n_cal must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("coverage_mc_check: alpha must be in (0,1)");
  if (trials < 1000) throw ConfigError("coverage_mc_check: need at least 1000 trials");

  auto k = static_cast<long long>(std::floor(alpha * (static_cast<double>(n_cal) + 1.0)));
  Rng rng(Rng::mix(seed, kMcSalt));
  std::vector<double> scores(n_cal);
  long long covered = 0;
  for (int t = 0; t < trials; ++t) {
    for (double& s : scores) s = rng.uniform();
    double test = rng.uniform();
    if (k < 1) {
      ++covered;  // vacuous regime: full-range set
      continue;
    }
    std::nth_element(scores.begin(), scores.begin() + (k - 1), scores.end());
    if (test >= scores[k - 1]) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(trials);
}

}  // namespace r2ccp
