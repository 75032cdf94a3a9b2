#include "r2ccp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace r2ccp {

Grid build_grid(double y_min, double y_max, int k_bins) {
  if (!std::isfinite(y_min) || !std::isfinite(y_max))
    throw std::invalid_argument("build_grid: non-finite label range");
  if (!(y_max > y_min))
    throw std::invalid_argument("build_grid: degenerate label range [" +
                                std::to_string(y_min) + ", " + std::to_string(y_max) + "]");
  if (k_bins < 2) throw std::invalid_argument("build_grid: k_bins must be >= 2");

  Grid g;
  g.y_min = y_min;
  g.y_max = y_max;
  g.k_bins = k_bins;
  g.midpoints.resize(static_cast<std::size_t>(k_bins));
  const double step = (y_max - y_min) / static_cast<double>(k_bins - 1);
  for (int k = 0; k < k_bins; ++k)
    g.midpoints[static_cast<std::size_t>(k)] = y_min + step * static_cast<double>(k);
  g.midpoints.front() = y_min;
  g.midpoints.back() = y_max;  // pin the endpoints exactly
  return g;
}

int nearest_bin(const Grid& grid, double y) {
  if (!std::isfinite(y)) throw std::invalid_argument("nearest_bin: non-finite label");
  const double step = grid.spacing();
  const double t = (y - grid.y_min) / step;
  int k = static_cast<int>(std::lround(std::floor(t + 0.5)));
  k = std::clamp(k, 0, grid.k_bins - 1);
  // The arithmetic guess can be off by one near boundaries; settle by exact
  // distance comparison with ties going to the lower index.
  int best = std::max(0, k - 1);
  double best_d = std::abs(y - grid.midpoints[static_cast<std::size_t>(best)]);
  for (int c = best + 1; c <= std::min(grid.k_bins - 1, k + 1); ++c) {
    const double d = std::abs(y - grid.midpoints[static_cast<std::size_t>(c)]);
    if (d < best_d) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

}  // namespace r2ccp
