#include "r2ccp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "r2ccp/errors.hpp"
#include "r2ccp/kernels.hpp"
#include "r2ccp/rng.hpp"

namespace r2ccp {

namespace {

constexpr std::uint64_t kInitSalt = 0x696e6974ULL;     // "init"
constexpr std::uint64_t kShuffleSalt = 0x73687566ULL;  // "shuf"

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim < 1) throw ConfigError("model: input_dim must be >= 1");
  if (hidden_dim < 1) throw ConfigError("model: hidden_dim must be >= 1");
  if (n_layers < 1) throw ConfigError("model: n_layers must be >= 1");
  if (k_bins < 1) throw ConfigError("model: k_bins must be >= 1");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("optimizer: learning_rate must be >= 0");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    throw ConfigError("optimizer: weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optimizer: beta1 must be in [0,1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optimizer: beta2 must be in [0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("optimizer: epsilon must be > 0");
  if (batch_size < 1) throw ConfigError("optimizer: batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("optimizer: epochs must be >= 0");
}

void Gradients::zero() {
  for (auto& g : w) std::fill(g.begin(), g.end(), 0.0);
  for (auto& g : b) std::fill(g.begin(), g.end(), 0.0);
}

void Gradients::scale(double factor) {
  for (auto& g : w) kern::ops().scal(g.data(), factor, g.size());
  for (auto& g : b) kern::ops().scal(g.data(), factor, g.size());
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
  double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - top);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  std::vector<int> sizes;
  sizes.push_back(cfg_.input_dim);
  for (int l = 0; l < cfg_.n_layers - 1; ++l) sizes.push_back(cfg_.hidden_dim);
  sizes.push_back(cfg_.k_bins);

  Rng rng(Rng::mix(cfg_.seed, kInitSalt));
  layers_.resize(sizes.size() - 1);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    layer.in_dim = sizes[l];
    layer.out_dim = sizes[l + 1];
    std::size_t wn = static_cast<std::size_t>(layer.out_dim) * layer.in_dim;
    layer.w.resize(wn);
    layer.b.resize(layer.out_dim);
    double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_dim));
    for (double& x : layer.w) x = rng.uniform(-bound, bound);
    for (double& x : layer.b) x = rng.uniform(-bound, bound);
    layer.mw.assign(wn, 0.0);
    layer.vw.assign(wn, 0.0);
    layer.mb.assign(layer.out_dim, 0.0);
    layer.vb.assign(layer.out_dim, 0.0);
  }
}

Model Model::from_weights(const ModelConfig& cfg, std::vector<Layer> layers) {
  Model m(cfg);
  if (layers.size() != m.layers_.size())
    throw ArtifactMismatchError("model: layer count does not match config");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& src = layers[l];
    Layer& dst = m.layers_[l];
    if (src.in_dim != dst.in_dim || src.out_dim != dst.out_dim ||
        src.w.size() != dst.w.size() || src.b.size() != dst.b.size())
      throw ArtifactMismatchError("model: layer shape does not match config");
    dst.w = src.w;
    dst.b = src.b;
    std::fill(dst.mw.begin(), dst.mw.end(), 0.0);
    std::fill(dst.vw.begin(), dst.vw.end(), 0.0);
    std::fill(dst.mb.begin(), dst.mb.end(), 0.0);
    std::fill(dst.vb.begin(), dst.vb.end(), 0.0);
  }
  m.step_ = 0;
  return m;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.w.size() + l.b.size();
  return n;
}

void Model::check_input(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != cfg_.input_dim)
    throw std::invalid_argument("model: feature vector has wrong dimension");
  if (!all_finite(x)) throw std::invalid_argument("model: non-finite feature value");
}

std::vector<double> Model::forward_cached(std::span<const double> x, Cache& cache) const {
  check_input(x);
  cache.acts.resize(layers_.size() + 1);
  cache.acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    std::vector<double>& out = cache.acts[l + 1];
    out.resize(layer.out_dim);
    kern::matvec(layer.w.data(), layer.b.data(), cache.acts[l].data(), out.data(),
                 layer.out_dim, layer.in_dim);
    if (l + 1 < layers_.size())
      for (double& h : out) h = std::tanh(h);
  }
  return cache.acts.back();
}

std::vector<double> Model::logits(std::span<const double> x) const {
  Cache cache;
  return forward_cached(x, cache);
}

DiscreteDensity Model::forward(const Grid& grid, std::span<const double> x) const {
  if (grid.k_bins != cfg_.k_bins)
    throw std::invalid_argument("model: grid bin count does not match config");
  return DiscreteDensity(grid, softmax(logits(x)));
}

void Model::backward_accumulate(const Cache& cache, std::span<const double> dlogits,
                                Gradients& grads) const {
  if (cache.acts.size() != layers_.size() + 1)
    throw std::invalid_argument("model: cache does not match this model");
  std::vector<double> delta(dlogits.begin(), dlogits.end());
  std::vector<double> dh;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    const std::vector<double>& input = cache.acts[l];
    kern::rank1_accum(grads.w[l].data(), delta.data(), input.data(), layer.out_dim,
                      layer.in_dim);
    kern::ops().axpy(1.0, delta.data(), grads.b[l].data(), layer.out_dim);
    if (l == 0) break;
    dh.resize(layer.in_dim);
    kern::matvec_t(layer.w.data(), delta.data(), dh.data(), layer.out_dim, layer.in_dim);
    // input holds tanh outputs, so tanh' = 1 - input^2.
    delta.resize(layer.in_dim);
    for (int i = 0; i < layer.in_dim; ++i) delta[i] = dh[i] * (1.0 - input[i] * input[i]);
  }
}

Gradients Model::make_gradients() const {
  Gradients g;
  g.w.resize(layers_.size());
  g.b.resize(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    g.w[l].assign(layers_[l].w.size(), 0.0);
    g.b[l].assign(layers_[l].b.size(), 0.0);
  }
  return g;
}

void Model::apply_adamw(const Gradients& grads, const OptimizerConfig& opt) {
  ++step_;
  kern::AdamwParams hp{};
  hp.lr = opt.learning_rate;
  hp.beta1 = opt.beta1;
  hp.beta2 = opt.beta2;
  hp.eps = opt.epsilon;
  hp.weight_decay = opt.weight_decay;
  hp.bias1 = 1.0 / (1.0 - std::pow(opt.beta1, static_cast<double>(step_)));
  hp.bias2 = 1.0 / (1.0 - std::pow(opt.beta2, static_cast<double>(step_)));
  const auto& k = kern::ops();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    k.adamw(layer.w.data(), grads.w[l].data(), layer.mw.data(), layer.vw.data(),
            layer.w.size(), hp);
    k.adamw(layer.b.data(), grads.b[l].data(), layer.mb.data(), layer.vb.data(),
            layer.b.size(), hp);
    if (!all_finite(layer.w) || !all_finite(layer.b))
      throw TrainingDivergedError("non-finite parameter after optimizer step");
  }
}

double train_step(Model& m, std::span<const double> xs, std::span<const double> ys,
                  const SampleObjective& objective, const OptimizerConfig& opt,
                  std::size_t* underflow_count) {
  std::size_t count = ys.size();
  if (count == 0) throw ConfigError("train_step: empty batch");
  auto dim = static_cast<std::size_t>(m.config().input_dim);
  if (xs.size() != count * dim) throw ConfigError("train_step: feature/label count mismatch");

  Gradients grads = m.make_gradients();
  Model::Cache cache;
  std::vector<double> dlogits(m.layers().back().out_dim);
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> logits = m.forward_cached(xs.subspan(i * dim, dim), cache);
    bool underflow = false;
    loss_sum += objective(logits, ys[i], dlogits, &underflow);
    if (underflow && underflow_count) ++*underflow_count;
    m.backward_accumulate(cache, dlogits, grads);
  }
  grads.scale(1.0 / static_cast<double>(count));
  double mean_loss = loss_sum / static_cast<double>(count);
  if (!std::isfinite(mean_loss)) throw TrainingDivergedError("non-finite loss");
  for (const auto& g : grads.w)
    if (!all_finite(g)) throw TrainingDivergedError("non-finite gradient");
  for (const auto& g : grads.b)
    if (!all_finite(g)) throw TrainingDivergedError("non-finite gradient");
  m.apply_adamw(grads, opt);
  return mean_loss;
}

namespace {

SampleObjective density_objective(const Grid& grid, const LossConfig& loss) {
  return [&grid, loss](std::span<const double> logits, double y, std::span<double> dlogits,
                       bool* underflow) {
    std::vector<double> probs = softmax(logits);
    double value = per_sample_loss(DiscreteDensity(grid, probs), y, loss, underflow);
    std::vector<double> g = logit_gradient(grid, probs, y, loss);
    std::copy(g.begin(), g.end(), dlogits.begin());
    return value;
  };
}

}  // namespace

double train_step(Model& m, const Grid& grid, std::span<const double> xs,
                  std::span<const double> ys, const LossConfig& loss,
                  const OptimizerConfig& opt, std::size_t* underflow_count) {
  if (grid.k_bins != m.config().k_bins)
    throw ConfigError("train_step: grid bin count does not match model");
  return train_step(m, xs, ys, density_objective(grid, loss), opt, underflow_count);
}

namespace {

FitResult fit_with_objective(Model& m, const Dataset& train, const SampleObjective& objective,
                             const OptimizerConfig& opt) {
  opt.validate();
  if (train.n() == 0) throw ConfigError("fit: empty training set");
  if (train.dim != m.config().input_dim)
    throw ConfigError("fit: dataset dimension does not match model input_dim");

  std::size_t n = train.n();
  auto dim = static_cast<std::size_t>(train.dim);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> batch_x(static_cast<std::size_t>(opt.batch_size) * dim);
  std::vector<double> batch_y(opt.batch_size);

  FitResult res;
  res.epoch_losses.reserve(opt.epochs);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    Rng rng(Rng::mix(Rng::mix(m.config().seed, kShuffleSalt), static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.bounded(i))]);

    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += opt.batch_size, ++batch_index) {
      std::size_t count = std::min<std::size_t>(opt.batch_size, n - start);
      for (std::size_t i = 0; i < count; ++i) {
        auto row = train.row(order[start + i]);
        std::copy(row.begin(), row.end(), batch_x.begin() + i * dim);
        batch_y[i] = train.labels[order[start + i]];
      }
      try {
        epoch_loss += train_step(m, std::span<const double>(batch_x.data(), count * dim),
                                 std::span<const double>(batch_y.data(), count), objective, opt,
                                 &res.underflow_count) *
                      static_cast<double>(count);
      } catch (const TrainingDivergedError& e) {
        std::ostringstream os;
        os << "training diverged at epoch " << epoch << ", batch " << batch_index << ": "
           << e.what();
        throw TrainingDivergedError(os.str());
      }
    }
    res.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
  }
  return res;
}

}  // namespace

FitResult fit(Model& m, const Dataset& train, const Grid& grid, const LossConfig& loss,
              const OptimizerConfig& opt) {
  loss.validate();
  if (grid.k_bins != m.config().k_bins)
    throw ConfigError("fit: grid bin count does not match model");
  return fit_with_objective(m, train, density_objective(grid, loss), opt);
}

FitResult fit_squared_error(Model& m, const Dataset& train, const OptimizerConfig& opt) {
  if (m.config().k_bins != 1)
    throw ConfigError("fit_squared_error: model must have a single output");
  SampleObjective objective = [](std::span<const double> logits, double y,
                                 std::span<double> dlogits, bool*) {
    double r = logits[0] - y;
    dlogits[0] = 2.0 * r;
    return r * r;
  };
  return fit_with_objective(m, train, objective, opt);
}

double predict_scalar(const Model& m, std::span<const double> x) {
  return m.logits(x)[0];
}

}  // namespace r2ccp
