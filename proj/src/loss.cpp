#include "r2ccp/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "r2ccp/errors.hpp"
#include "r2ccp/kernels.hpp"

namespace r2ccp {

namespace {

constexpr double kProbFloor = 1e-300;

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

bool uses_entropy(LossVariant v) {
  return v == LossVariant::main || v == LossVariant::mle_entropy;
}

}  // namespace

LossVariant loss_variant_from_string(const std::string& name) {
  if (name == "main") return LossVariant::main;
  if (name == "no_entropy") return LossVariant::no_entropy;
  if (name == "mle") return LossVariant::mle;
  if (name == "mle_entropy") return LossVariant::mle_entropy;
  throw ConfigError("unknown loss variant: " + name);
}

const char* loss_variant_name(LossVariant v) {
  switch (v) {
    case LossVariant::main: return "main";
    case LossVariant::no_entropy: return "no_entropy";
    case LossVariant::mle: return "mle";
    case LossVariant::mle_entropy: return "mle_entropy";
  }
  return "?";
}

void LossConfig::validate() const {
  if (!(p > 0.0)) throw ConfigError("LossConfig: p must be > 0");
  if (!(tau >= 0.0)) throw ConfigError("LossConfig: tau must be >= 0");
}

std::vector<double> distance_weights(const Grid& grid, double y, double p) {
  if (!std::isfinite(y)) throw ConfigError("distance_weights: non-finite y");
  if (!(p > 0.0)) throw ConfigError("distance_weights: p must be > 0");
  std::vector<double> w(grid.midpoints.size());
  for (std::size_t k = 0; k < w.size(); ++k)
    w[k] = std::pow(std::abs(y - grid.midpoints[k]), p);
  return w;
}

double entropy(std::span<const double> probs) {
  double acc = 0.0;
  for (double q : probs) acc -= xlogx(q);
  return acc;
}

double per_sample_loss(const DiscreteDensity& d, double y, const LossConfig& cfg,
                       bool* underflow) {
  cfg.validate();
  if (underflow != nullptr) *underflow = false;
  const std::vector<double>& q = d.probs();
  const Grid& g = d.grid();

  switch (cfg.variant) {
    case LossVariant::main: {
      const std::vector<double> w = distance_weights(g, y, cfg.p);
      return kern::ops().dot(w.data(), q.data(), q.size()) - cfg.tau * entropy(q);
    }
    case LossVariant::no_entropy: {
      const std::vector<double> w = distance_weights(g, y, cfg.p);
      return kern::ops().dot(w.data(), q.data(), q.size());
    }
    case LossVariant::mle:
    case LossVariant::mle_entropy: {
      const std::size_t tilde = static_cast<std::size_t>(nearest_bin(g, y));
      double qt = q[tilde];
      if (qt < kProbFloor) {
        qt = kProbFloor;
        if (underflow != nullptr) *underflow = true;
      }
      double value = -std::log(qt);
      if (cfg.variant == LossVariant::mle_entropy) value -= cfg.tau * entropy(q);
      return value;
    }
  }
  throw std::logic_error("per_sample_loss: unreachable");
}

std::vector<double> logit_gradient(const Grid& grid, std::span<const double> probs, double y,
                                   const LossConfig& cfg) {
  cfg.validate();
  const std::size_t n = probs.size();
  std::vector<double> g(n, 0.0);

  if (cfg.variant == LossVariant::main || cfg.variant == LossVariant::no_entropy) {
    const std::vector<double> w = distance_weights(grid, y, cfg.p);
    const double wq = kern::ops().dot(w.data(), probs.data(), n);
    for (std::size_t j = 0; j < n; ++j) g[j] = probs[j] * (w[j] - wq);
  } else {
    // Cross-entropy against the nearest bin: softmax probs minus one-hot.
    const std::size_t tilde = static_cast<std::size_t>(nearest_bin(grid, y));
    for (std::size_t j = 0; j < n; ++j) g[j] = probs[j];
    g[tilde] -= 1.0;
  }

  if (uses_entropy(cfg.variant) && cfg.tau != 0.0) {
    const double h = entropy(probs);
    for (std::size_t j = 0; j < n; ++j)
      if (probs[j] > 0.0) g[j] += cfg.tau * probs[j] * (std::log(probs[j]) + h);
  }
  return g;
}

}  // namespace r2ccp
