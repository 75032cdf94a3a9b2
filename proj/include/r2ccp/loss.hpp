#pragma once

#include <span>
#include <string>
#include <vector>

#include "r2ccp/density.hpp"
#include "r2ccp/grid.hpp"

namespace r2ccp {

// The trained objective and its ablation variants.
enum class LossVariant { main, no_entropy, mle, mle_entropy };

LossVariant loss_variant_from_string(const std::string& name);
const char* loss_variant_name(LossVariant v);

struct LossConfig {
  LossVariant variant = LossVariant::main;
  double p = 0.5;    // exponent on |y - midpoint|
  double tau = 0.2;  // entropy weight; ignored by no_entropy and mle

  void validate() const;
};

// w_k = |y - midpoint_k|^p; exactly zero where y hits a midpoint.
std::vector<double> distance_weights(const Grid& grid, double y, double p);

// Shannon entropy -sum q ln q with 0 ln 0 = 0; range [0, ln K].
double entropy(std::span<const double> probs);

// Objective value for one sample. MLE variants clamp an underflowed bin
// probability at 1e-300 and report it through *underflow when given.
double per_sample_loss(const DiscreteDensity& d, double y, const LossConfig& cfg,
                       bool* underflow = nullptr);

// Gradient of the per-sample objective with respect to the logits that
// produced `probs` via softmax.
std::vector<double> logit_gradient(const Grid& grid, std::span<const double> probs, double y,
                                   const LossConfig& cfg);

}  // namespace r2ccp
