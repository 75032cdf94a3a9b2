#include "r2ccp/density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace r2ccp {

namespace {
constexpr double kSliverWidth = 1e-12;
constexpr double kNormTol = 1e-9;
}  // namespace

bool PredictionSet::contains(double y) const {
  for (const Interval& iv : intervals) {
    if (y < iv.lo) return false;
    if (y <= iv.hi) return true;
  }
  return false;
}

double set_length(const PredictionSet& s) {
  double total = 0.0;
  for (const Interval& iv : s.intervals) total += iv.width();
  return total;
}

DiscreteDensity::DiscreteDensity(const Grid& grid, std::vector<double> probs)
    : grid_(&grid), probs_(std::move(probs)) {
  if (probs_.size() != static_cast<std::size_t>(grid.k_bins))
    throw std::invalid_argument("DiscreteDensity: probs length != k_bins");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw std::invalid_argument("DiscreteDensity: negative or NaN probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kNormTol)
    throw std::invalid_argument("DiscreteDensity: probabilities do not sum to 1");
}

double interpolate(const DiscreteDensity& d, double y) {
  if (!std::isfinite(y)) throw std::invalid_argument("interpolate: non-finite y");
  const Grid& g = d.grid();
  if (y < g.y_min || y > g.y_max) return 0.0;
  const double step = g.spacing();
  int k = static_cast<int>(std::floor((y - g.y_min) / step));
  k = std::clamp(k, 0, g.k_bins - 2);
  const std::size_t ku = static_cast<std::size_t>(k);
  const double lo = g.midpoints[ku];
  const double hi = g.midpoints[ku + 1];
  const double gamma = (hi - y) / (hi - lo);
  return gamma * d.probs()[ku] + (1.0 - gamma) * d.probs()[ku + 1];
}

PredictionSet superlevel_set(const DiscreteDensity& d, double threshold) {
  if (std::isnan(threshold)) throw std::invalid_argument("superlevel_set: NaN threshold");
  const Grid& g = d.grid();
  const std::vector<double>& q = d.probs();

  PredictionSet out;
  out.threshold = threshold;

  std::vector<Interval> raw;
  for (int k = 0; k + 1 < g.k_bins; ++k) {
    const std::size_t ku = static_cast<std::size_t>(k);
    const double ya = g.midpoints[ku];
    const double yb = g.midpoints[ku + 1];
    const double pa = q[ku];
    const double pb = q[ku + 1];
    const bool in_a = pa >= threshold;
    const bool in_b = pb >= threshold;
    if (in_a && in_b) {
      raw.push_back({ya, yb});
    } else if (in_a != in_b) {
      // Linear crossing: value t is reached at z between the midpoints.
      const double z = ya + (yb - ya) * (threshold - pa) / (pb - pa);
      if (in_a)
        raw.push_back({ya, std::min(z, yb)});
      else
        raw.push_back({std::max(z, ya), yb});
    }
  }

  // Merge runs that share an endpoint, then drop degenerate slivers.
  for (const Interval& iv : raw) {
    if (!out.intervals.empty() && iv.lo <= out.intervals.back().hi)
      out.intervals.back().hi = std::max(out.intervals.back().hi, iv.hi);
    else
      out.intervals.push_back(iv);
  }
  std::erase_if(out.intervals, [](const Interval& iv) { return iv.width() < kSliverWidth; });
  return out;
}

double point_predict(const DiscreteDensity& d, PointMode mode) {
  const Grid& g = d.grid();
  const std::vector<double>& q = d.probs();
  if (mode == PointMode::expectation) {
    double acc = 0.0;
    for (int k = 0; k < g.k_bins; ++k)
      acc += g.midpoints[static_cast<std::size_t>(k)] * q[static_cast<std::size_t>(k)];
    return acc;
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < q.size(); ++k)
    if (q[k] > q[best]) best = k;
  return g.midpoints[best];
}

}  // namespace r2ccp
