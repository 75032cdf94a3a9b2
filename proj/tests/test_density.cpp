#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "r2ccp/density.hpp"
#include "r2ccp/errors.hpp"
#include "r2ccp/grid.hpp"
#include "r2ccp/rng.hpp"

using namespace r2ccp;

namespace {

// Normalized random density, occasionally spiky.
std::vector<double> random_probs(Rng& rng, int k) {
  std::vector<double> p(k);
  double sum = 0.0;
  for (double& x : p) {
    x = rng.uniform();
    if (rng.uniform() < 0.2) x *= 1e-6;  // near-zero bins
    sum += x;
  }
  for (double& x : p) x /= sum;
  return p;
}

}  // namespace

TEST_CASE("density constructor validates probs") {
  Grid g = build_grid(0.0, 1.0, 3);
  CHECK_NOTHROW(DiscreteDensity(g, {0.5, 0.0, 0.5}));
  CHECK_THROWS_AS(DiscreteDensity(g, {0.5, 0.5}), std::invalid_argument);          // size
  CHECK_THROWS_AS(DiscreteDensity(g, {0.7, -0.2, 0.5}), std::invalid_argument);    // negative
  CHECK_THROWS_AS(DiscreteDensity(g, {0.5, 0.0, 0.6}), std::invalid_argument);     // sum
  CHECK_THROWS_AS(DiscreteDensity(g, {0.5, std::nan(""), 0.5}), std::invalid_argument);
}

TEST_CASE("interpolate matches the gamma formula") {
  Grid g2 = build_grid(0.0, 1.0, 2);
  DiscreteDensity d(g2, {0.25, 0.75});
  CHECK(interpolate(d, 0.25) == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(interpolate(d, 0.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(interpolate(d, 1.0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(interpolate(d, 0.5) == doctest::Approx(0.5).epsilon(1e-12));  // segment midpoint

  // At a midpoint, the score is that bin's probability.
  Rng rng(11);
  Grid g = build_grid(-2.0, 3.0, 7);
  DiscreteDensity dr(g, random_probs(rng, 7));
  for (int k = 0; k < 7; ++k)
    CHECK(interpolate(dr, g.midpoints[k]) == doctest::Approx(dr.probs()[k]).epsilon(1e-12));
  for (int k = 0; k + 1 < 7; ++k) {
    double mid = 0.5 * (g.midpoints[k] + g.midpoints[k + 1]);
    CHECK(interpolate(dr, mid) ==
          doctest::Approx(0.5 * (dr.probs()[k] + dr.probs()[k + 1])).epsilon(1e-12));
  }
}

TEST_CASE("interpolate is zero outside the grid range and rejects NaN") {
  Grid g = build_grid(0.0, 1.0, 3);
  DiscreteDensity d(g, {0.2, 0.3, 0.5});
  CHECK(interpolate(d, -0.001) == 0.0);
  CHECK(interpolate(d, 1.001) == 0.0);
  CHECK(interpolate(d, -100.0) == 0.0);
  CHECK_THROWS_AS(interpolate(d, std::nan("")), std::invalid_argument);
}

TEST_CASE("superlevel_set extracts the hand-derived valley example") {
  Grid g = build_grid(0.0, 1.0, 3);
  DiscreteDensity d(g, {0.5, 0.0, 0.5});
  PredictionSet s = superlevel_set(d, 0.25);
  REQUIRE(s.intervals.size() == 2);
  CHECK(s.intervals[0].lo == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.intervals[0].hi == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(s.intervals[1].lo == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(s.intervals[1].hi == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(set_length(s) == doctest::Approx(0.5).epsilon(1e-12));

  // Cross-check against a dense scan.
  const int m = 100000;
  for (int i = 0; i <= m; ++i) {
    double z = static_cast<double>(i) / m;
    bool member = interpolate(d, z) >= 0.25;
    bool in_set = s.contains(z);
    if (std::abs(interpolate(d, z) - 0.25) > 1e-9) CHECK(member == in_set);
  }
}

TEST_CASE("superlevel_set edge thresholds") {
  Grid g = build_grid(0.0, 1.0, 3);
  DiscreteDensity d(g, {0.5, 0.0, 0.5});

  PredictionSet full = superlevel_set(d, 0.0);
  REQUIRE(full.intervals.size() == 1);
  CHECK(full.intervals[0].lo == 0.0);
  CHECK(full.intervals[0].hi == 1.0);
  CHECK(set_length(full) == doctest::Approx(1.0));

  PredictionSet neg = superlevel_set(d, -std::numeric_limits<double>::infinity());
  REQUIRE(neg.intervals.size() == 1);
  CHECK(set_length(neg) == doctest::Approx(1.0));

  PredictionSet empty = superlevel_set(d, 0.6);
  CHECK(empty.empty());
  CHECK(set_length(empty) == 0.0);

  CHECK_THROWS_AS(superlevel_set(d, std::nan("")), std::invalid_argument);
}

TEST_CASE("superlevel_set merges across flat tops") {
  Grid g = build_grid(0.0, 1.0, 3);
  DiscreteDensity d(g, {0.5, 0.5, 0.0});
  PredictionSet s = superlevel_set(d, 0.3);
  REQUIRE(s.intervals.size() == 1);
  CHECK(s.intervals[0].lo == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.intervals[0].hi == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("point_predict expectation and argmax") {
  Grid g5 = build_grid(0.0, 1.0, 5);
  DiscreteDensity uniform(g5, {0.2, 0.2, 0.2, 0.2, 0.2});
  CHECK(point_predict(uniform, PointMode::expectation) == doctest::Approx(0.5).epsilon(1e-12));

  DiscreteDensity onehot(g5, {0.0, 0.0, 1.0, 0.0, 0.0});
  CHECK(point_predict(onehot, PointMode::argmax) == doctest::Approx(0.5).epsilon(1e-12));

  Grid g2 = build_grid(0.0, 1.0, 2);
  DiscreteDensity d(g2, {0.25, 0.75});
  CHECK(point_predict(d, PointMode::expectation) == doctest::Approx(0.75).epsilon(1e-12));

  DiscreteDensity tie(g2, {0.5, 0.5});
  CHECK(point_predict(tie, PointMode::argmax) == 0.0);  // tie -> lower index
}

TEST_CASE("PredictionSet containment is boundary-inclusive") {
  PredictionSet s;
  s.intervals = {{0.0, 0.25}, {0.75, 1.0}};
  CHECK(s.contains(0.0));
  CHECK(s.contains(0.25));
  CHECK(s.contains(0.75));
  CHECK(!s.contains(0.5));
  CHECK(!s.contains(0.26));
  CHECK(s.singleton() == false);
  PredictionSet one;
  one.intervals = {{0.3, 0.3}};
  CHECK(one.singleton());
  CHECK(one.contains(0.3));
}

TEST_CASE("membership oracle equivalence on random densities") {
  Rng rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    int k = 2 + static_cast<int>(rng.bounded(30));
    Grid g = build_grid(rng.uniform(-5.0, 0.0), rng.uniform(0.5, 5.0), k);
    DiscreteDensity d(g, random_probs(rng, k));
    double maxp = 0.0;
    for (double p : d.probs()) maxp = std::max(maxp, p);
    double t = rng.uniform(0.0, maxp * 1.1);
    PredictionSet s = superlevel_set(d, t);

    for (int i = 0; i < 250; ++i) {
      double z = rng.uniform(g.y_min, g.y_max);
      double score = interpolate(d, z);
      if (std::abs(score - t) <= 1e-12) continue;  // knife-edge
      CHECK((score >= t) == s.contains(z));
    }
  }
}

TEST_CASE("set_length is nonincreasing in the threshold") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    int k = 3 + static_cast<int>(rng.bounded(20));
    Grid g = build_grid(0.0, 1.0, k);
    DiscreteDensity d(g, random_probs(rng, k));
    double prev = std::numeric_limits<double>::infinity();
    for (int step = 0; step <= 20; ++step) {
      double t = 0.02 * step;
      double len = set_length(superlevel_set(d, t));
      CHECK(len <= prev + 1e-12);
      prev = len;
    }
  }
}

TEST_CASE("intervals stay within the grid and slivers are dropped") {
  Grid g = build_grid(0.0, 1.0, 3);
  // Peak exactly at the threshold: only a degenerate touch point at z=0.5.
  DiscreteDensity d(g, {0.0, 1.0, 0.0});
  PredictionSet s = superlevel_set(d, 1.0);
  // The touch point is a zero-width interval; it may be kept as [0.5, 0.5]
  // or dropped as a sliver, but must never have positive length.
  CHECK(set_length(s) == doctest::Approx(0.0).epsilon(1e-12));
  for (const Interval& iv : s.intervals) {
    CHECK(iv.lo >= 0.0);
    CHECK(iv.hi <= 1.0);
  }
}
