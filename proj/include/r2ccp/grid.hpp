#pragma once

#include <vector>

namespace r2ccp {

// Equidistant discretization of the label range. Midpoints run from y_min to
// y_max inclusive; immutable after construction.
struct Grid {
  double y_min = 0.0;
  double y_max = 1.0;
  int k_bins = 2;
  std::vector<double> midpoints;

  double spacing() const { return (y_max - y_min) / static_cast<double>(k_bins - 1); }
};

Grid build_grid(double y_min, double y_max, int k_bins);

// Index of the midpoint closest to y; ties break toward the lower index and
// out-of-range y clamps to the nearest endpoint bin.
int nearest_bin(const Grid& grid, double y);

}  // namespace r2ccp
