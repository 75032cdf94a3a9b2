#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "r2ccp/data.hpp"
#include "r2ccp/errors.hpp"
#include "r2ccp/grid.hpp"
#include "r2ccp/loss.hpp"
#include "r2ccp/model.hpp"
#include "r2ccp/rng.hpp"

using namespace r2ccp;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden_dim = 4;
  cfg.n_layers = 2;
  cfg.k_bins = 5;
  cfg.seed = 11;
  return cfg;
}

Dataset toy_dataset(std::size_t n, std::uint64_t seed, int dim = 1) {
  Rng rng(seed);
  Dataset ds;
  ds.dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    double y = 0.0;
    for (int d = 0; d < dim; ++d) {
      double x = rng.uniform(-1.0, 1.0);
      ds.features.push_back(x);
      y += x;
    }
    ds.labels.push_back(std::sin(y) + 0.1 * rng.gaussian());
  }
  return ds;
}

double sample_loss(const Model& m, const Grid& grid, std::span<const double> x, double y,
                   const LossConfig& cfg) {
  return per_sample_loss(m.forward(grid, x), y, cfg);
}

}  // namespace

TEST_CASE("config validation rejects degenerate shapes") {
  ModelConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.hidden_dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.input_dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.n_layers = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.k_bins = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  OptimizerConfig opt;
  CHECK_NOTHROW(opt.validate());
  opt.learning_rate = -1e-4;
  CHECK_THROWS_AS(opt.validate(), ConfigError);
  opt = OptimizerConfig{};
  opt.beta1 = 1.0;
  CHECK_THROWS_AS(opt.validate(), ConfigError);
  opt = OptimizerConfig{};
  opt.batch_size = 0;
  CHECK_THROWS_AS(opt.validate(), ConfigError);
}

TEST_CASE("initialization is deterministic and bounded by 1/sqrt(fan_in)") {
  ModelConfig cfg = small_config();
  Model a(cfg);
  Model b(cfg);
  REQUIRE(a.layers().size() == 2);
  for (std::size_t l = 0; l < a.layers().size(); ++l) {
    CHECK(a.layers()[l].w == b.layers()[l].w);  // bitwise identical
    CHECK(a.layers()[l].b == b.layers()[l].b);
    double bound = 1.0 / std::sqrt(static_cast<double>(a.layers()[l].in_dim));
    for (double x : a.layers()[l].w) CHECK(std::abs(x) <= bound);
    for (double x : a.layers()[l].b) CHECK(std::abs(x) <= bound);
  }

  cfg.seed = 12;
  Model c(cfg);
  CHECK(a.layers()[0].w != c.layers()[0].w);
}

TEST_CASE("network shape follows input/hidden/layers/k_bins") {
  ModelConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dim = 8;
  cfg.n_layers = 2;
  cfg.k_bins = 5;
  Model m(cfg);
  std::vector<double> x{0.3, -0.4};
  CHECK(m.logits(x).size() == 5);
  CHECK(m.parameter_count() == (2 * 8 + 8) + (8 * 5 + 5));

  // A single layer is one affine map, no activation.
  cfg.n_layers = 1;
  Model affine(cfg);
  CHECK(affine.layers().size() == 1);
  CHECK(affine.layers()[0].in_dim == 2);
  CHECK(affine.layers()[0].out_dim == 5);
}

TEST_CASE("zero weights yield the uniform density") {
  ModelConfig cfg = small_config();
  Model init(cfg);
  std::vector<Layer> zeros = init.layers();
  for (Layer& l : zeros) {
    std::fill(l.w.begin(), l.w.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
  Model m = Model::from_weights(cfg, zeros);
  Grid grid = build_grid(0.0, 1.0, cfg.k_bins);
  DiscreteDensity d = m.forward(grid, std::vector<double>{0.1, 0.2, 0.3});
  for (double q : d.probs()) CHECK(q == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("from_weights rejects mismatched shapes") {
  ModelConfig cfg = small_config();
  Model init(cfg);
  std::vector<Layer> layers = init.layers();
  layers.pop_back();
  CHECK_THROWS_AS(Model::from_weights(cfg, layers), ArtifactMismatchError);

  layers = init.layers();
  layers[0].w.push_back(0.0);
  CHECK_THROWS_AS(Model::from_weights(cfg, layers), ArtifactMismatchError);
}

TEST_CASE("softmax is a translation-invariant simplex map") {
  std::vector<double> p = softmax(std::vector<double>{0.0, std::log(3.0)});
  CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-14));

  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> logits(6);
    for (double& l : logits) l = rng.uniform(-5.0, 5.0);
    std::vector<double> shifted = logits;
    double c = rng.uniform(-10.0, 10.0);
    for (double& l : shifted) l += c;
    std::vector<double> a = softmax(logits), b = softmax(shifted);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
      CHECK(a[i] >= 0.0);
      sum += a[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("forward rejects malformed inputs") {
  Model m(small_config());
  Grid grid = build_grid(-1.0, 1.0, 5);
  CHECK_THROWS(m.logits(std::vector<double>{1.0, 2.0}));                 // wrong dim
  CHECK_THROWS(m.logits(std::vector<double>{1.0, 2.0, std::nan("")}));   // non-finite
  Grid wrong = build_grid(-1.0, 1.0, 4);
  CHECK_THROWS(m.forward(wrong, std::vector<double>{0.0, 0.0, 0.0}));    // K mismatch
}

TEST_CASE("parameter gradients match finite differences for every variant") {
  ModelConfig cfg = small_config();
  Grid grid = build_grid(-1.0, 1.0, cfg.k_bins);
  std::vector<double> x{0.4, -0.7, 0.2};
  double y = 0.37;
  const double h = 1e-5;

  for (LossVariant v : {LossVariant::main, LossVariant::no_entropy, LossVariant::mle,
                        LossVariant::mle_entropy}) {
    LossConfig loss;
    loss.variant = v;
    loss.p = 0.5;
    loss.tau = 0.2;

    Model m(cfg);
    Gradients grads = m.make_gradients();
    Model::Cache cache;
    std::vector<double> logits = m.forward_cached(x, cache);
    std::vector<double> dlogits = logit_gradient(grid, softmax(logits), y, loss);
    m.backward_accumulate(cache, dlogits, grads);

    for (std::size_t l = 0; l < m.layers().size(); ++l) {
      auto check_block = [&](std::vector<double>& params, const std::vector<double>& analytic) {
        for (std::size_t i = 0; i < params.size(); ++i) {
          double saved = params[i];
          params[i] = saved + h;
          double plus = sample_loss(m, grid, x, y, loss);
          params[i] = saved - h;
          double minus = sample_loss(m, grid, x, y, loss);
          params[i] = saved;
          double fd = (plus - minus) / (2 * h);
          double err = std::abs(analytic[i] - fd);
          double scale = std::max(std::abs(fd), std::abs(analytic[i]));
          CHECK(err <= std::max(1e-7, 1e-4 * scale));
        }
      };
      check_block(m.mutable_layers()[l].w, grads.w[l]);
      check_block(m.mutable_layers()[l].b, grads.b[l]);
    }
  }
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  Model m(small_config());
  std::vector<double> w0 = m.layers()[0].w;
  Grid grid = build_grid(-1.0, 1.0, 5);
  OptimizerConfig opt;
  opt.learning_rate = 0.0;
  opt.weight_decay = 0.0;
  std::vector<double> xs{0.1, 0.2, 0.3};
  std::vector<double> ys{0.5};
  train_step(m, grid, xs, ys, LossConfig{}, opt);
  CHECK(m.layers()[0].w == w0);
  CHECK(m.steps_taken() == 1);
}

TEST_CASE("a gradient step on one sample decreases its loss") {
  ModelConfig cfg = small_config();
  Model m(cfg);
  Grid grid = build_grid(-1.0, 1.0, 5);
  LossConfig loss;
  OptimizerConfig opt;
  opt.learning_rate = 1e-3;
  opt.weight_decay = 0.0;
  std::vector<double> xs{0.4, -0.7, 0.2};
  std::vector<double> ys{0.37};

  double before = sample_loss(m, grid, xs, ys[0], loss);
  double reported = train_step(m, grid, xs, ys, loss, opt);
  CHECK(reported == doctest::Approx(before).epsilon(1e-12));  // loss before the step
  double after = sample_loss(m, grid, xs, ys[0], loss);
  CHECK(after < before);
}

TEST_CASE("fit is deterministic and improves the objective") {
  Dataset train = toy_dataset(96, 21);
  Grid grid = build_grid(-1.5, 1.5, 8);
  ModelConfig cfg;
  cfg.input_dim = 1;
  cfg.hidden_dim = 16;
  cfg.n_layers = 3;
  cfg.k_bins = 8;
  cfg.seed = 5;
  OptimizerConfig opt;
  opt.learning_rate = 1e-3;
  opt.epochs = 20;
  LossConfig loss;

  Model a(cfg);
  FitResult ra = fit(a, train, grid, loss, opt);
  Model b(cfg);
  FitResult rb = fit(b, train, grid, loss, opt);

  REQUIRE(ra.epoch_losses.size() == 20);
  CHECK(ra.epoch_losses == rb.epoch_losses);  // bitwise-identical trajectories
  for (std::size_t l = 0; l < a.layers().size(); ++l) {
    CHECK(a.layers()[l].w == b.layers()[l].w);
    CHECK(a.layers()[l].b == b.layers()[l].b);
  }
  CHECK(ra.epoch_losses.back() < ra.epoch_losses.front());
}

TEST_CASE("fit with zero epochs is a no-op") {
  Dataset train = toy_dataset(16, 3);
  Grid grid = build_grid(-1.5, 1.5, 5);
  ModelConfig cfg = small_config();
  cfg.input_dim = 1;
  Model m(cfg);
  std::vector<double> w0 = m.layers()[0].w;
  OptimizerConfig opt;
  opt.epochs = 0;
  FitResult r = fit(m, train, grid, LossConfig{}, opt);
  CHECK(r.epoch_losses.empty());
  CHECK(m.layers()[0].w == w0);
  CHECK(m.steps_taken() == 0);
}

TEST_CASE("a non-finite sample loss aborts the step") {
  ModelConfig cfg = small_config();
  cfg.input_dim = 1;
  Model m(cfg);
  OptimizerConfig opt;
  SampleObjective bad = [](std::span<const double>, double, std::span<double> dlogits, bool*) {
    std::fill(dlogits.begin(), dlogits.end(), 0.0);
    return std::nan("");
  };
  std::vector<double> xs{0.1};
  std::vector<double> ys{0.0};
  std::vector<double> w0 = m.layers()[0].w;
  CHECK_THROWS_AS(train_step(m, xs, ys, bad, opt), TrainingDivergedError);
  CHECK(m.layers()[0].w == w0);  // aborted before the optimizer ran
  CHECK(m.steps_taken() == 0);
}

TEST_CASE("fit reports divergence position through TrainingDivergedError") {
  Dataset train = toy_dataset(64, 9);
  Grid grid = build_grid(-4.0, 4.0, 5);
  ModelConfig cfg = small_config();
  cfg.input_dim = 1;
  Model m(cfg);
  OptimizerConfig opt;
  opt.learning_rate = 1e80;  // overflow the parameters almost immediately
  opt.epochs = 3;
  opt.weight_decay = 1e80;
  bool threw = false;
  try {
    fit(m, train, grid, LossConfig{}, opt);
  } catch (const TrainingDivergedError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    CHECK(std::string(e.what()).find("batch") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("squared-error baseline trains a scalar head") {
  Dataset train = toy_dataset(128, 31);
  ModelConfig cfg;
  cfg.input_dim = 1;
  cfg.hidden_dim = 8;
  cfg.n_layers = 2;
  cfg.k_bins = 1;
  cfg.seed = 2;
  Model m(cfg);
  OptimizerConfig opt;
  opt.learning_rate = 1e-2;
  opt.epochs = 40;
  FitResult r = fit_squared_error(m, train, opt);
  CHECK(r.epoch_losses.back() < r.epoch_losses.front());
  double pred = predict_scalar(m, std::vector<double>{0.5});
  CHECK(std::isfinite(pred));

  ModelConfig multi = small_config();
  Model wide(multi);
  CHECK_THROWS_AS(fit_squared_error(wide, train, opt), ConfigError);
}

TEST_CASE("fit validates dataset dimension and emptiness") {
  ModelConfig cfg = small_config();
  Model m(cfg);
  Grid grid = build_grid(-1.0, 1.0, 5);
  OptimizerConfig opt;
  Dataset wrong = toy_dataset(8, 1, 2);
  CHECK_THROWS_AS(fit(m, wrong, grid, LossConfig{}, opt), ConfigError);
  Dataset empty;
  empty.dim = 3;
  CHECK_THROWS_AS(fit(m, empty, grid, LossConfig{}, opt), ConfigError);
}
