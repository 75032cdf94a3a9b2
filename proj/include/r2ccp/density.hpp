#pragma once

#include <span>
#include <vector>

#include "r2ccp/grid.hpp"

namespace r2ccp {

// One closed interval in label units.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double y) const { return lo <= y && y <= hi; }
};

// Finite union of disjoint closed intervals plus the score cutoff that
// produced it. Intervals are sorted by lo.
struct PredictionSet {
  std::vector<Interval> intervals;
  double threshold = 0.0;

  bool empty() const { return intervals.empty(); }
  bool singleton() const { return intervals.size() == 1; }
  bool contains(double y) const;
};

double set_length(const PredictionSet& s);

// Length-K probability vector over the midpoints of a Grid. Validates
// nonnegativity and normalization on construction; immutable afterwards.
class DiscreteDensity {
 public:
  DiscreteDensity(const Grid& grid, std::vector<double> probs);

  const Grid& grid() const { return *grid_; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  const Grid* grid_;
  std::vector<double> probs_;
};

// Piecewise-linear interpolant of the bin probabilities; zero outside
// [y_min, y_max].
double interpolate(const DiscreteDensity& d, double y);

// Exact superlevel set {y : interpolate(y) >= threshold} as closed intervals.
// Touching intervals are merged; slivers below 1e-12 width are dropped.
PredictionSet superlevel_set(const DiscreteDensity& d, double threshold);

enum class PointMode { expectation, argmax };

double point_predict(const DiscreteDensity& d, PointMode mode);

}  // namespace r2ccp
