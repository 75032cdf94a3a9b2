#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "r2ccp/data.hpp"
#include "r2ccp/density.hpp"
#include "r2ccp/grid.hpp"
#include "r2ccp/loss.hpp"

namespace r2ccp {

struct ModelConfig {
  int input_dim = 1;
  int hidden_dim = 64;
  int n_layers = 3;
  int k_bins = 50;
  std::uint64_t seed = 1;

  void validate() const;
};

struct OptimizerConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 32;
  int epochs = 30;

  void validate() const;
};

// One affine layer plus its AdamW moment accumulators. Weights are row-major
// (out_dim x in_dim).
struct Layer {
  int out_dim = 0;
  int in_dim = 0;
  std::vector<double> w, b;
  std::vector<double> mw, vw, mb, vb;
};

struct Gradients {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;

  void zero();
  void scale(double factor);
};

std::vector<double> softmax(std::span<const double> logits);

// Fully connected net: n_layers affine layers with tanh between them and a
// linear read-out of k_bins logits. n_layers=1 is a single affine map.
class Model {
 public:
  explicit Model(const ModelConfig& cfg);
  static Model from_weights(const ModelConfig& cfg, std::vector<Layer> layers);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::int64_t steps_taken() const { return step_; }
  std::size_t parameter_count() const;

  std::vector<double> logits(std::span<const double> x) const;
  DiscreteDensity forward(const Grid& grid, std::span<const double> x) const;

  // Activations per layer boundary: acts[0] = x, acts[L] = logits.
  struct Cache {
    std::vector<std::vector<double>> acts;
  };
  std::vector<double> forward_cached(std::span<const double> x, Cache& cache) const;
  void backward_accumulate(const Cache& cache, std::span<const double> dlogits,
                           Gradients& grads) const;

  Gradients make_gradients() const;
  void apply_adamw(const Gradients& mean_grads, const OptimizerConfig& opt);

  // Mutable access for deserialization only.
  std::vector<Layer>& mutable_layers() { return layers_; }

 private:
  Model() = default;
  void check_input(std::span<const double> x) const;

  ModelConfig cfg_;
  std::vector<Layer> layers_;
  std::int64_t step_ = 0;
};

struct FitResult {
  std::vector<double> epoch_losses;
  std::size_t underflow_count = 0;
};

// Per-sample objective: given the logits for x, write dL/dlogits and return
// the loss value. `underflow` may be flipped to true (never cleared).
using SampleObjective = std::function<double(std::span<const double> logits, double y,
                                             std::span<double> dlogits, bool* underflow)>;

// One optimizer step on the mean gradient over the batch; returns the mean
// per-sample loss evaluated before the step.
double train_step(Model& m, std::span<const double> xs, std::span<const double> ys,
                  const SampleObjective& objective, const OptimizerConfig& opt,
                  std::size_t* underflow_count = nullptr);

double train_step(Model& m, const Grid& grid, std::span<const double> xs,
                  std::span<const double> ys, const LossConfig& loss,
                  const OptimizerConfig& opt, std::size_t* underflow_count = nullptr);

FitResult fit(Model& m, const Dataset& train, const Grid& grid, const LossConfig& loss,
              const OptimizerConfig& opt);

// Squared-error trainer for the scalar-output baseline regressor.
FitResult fit_squared_error(Model& m, const Dataset& train, const OptimizerConfig& opt);
double predict_scalar(const Model& m, std::span<const double> x);

}  // namespace r2ccp
