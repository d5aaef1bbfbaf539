#include <doctest.h>

#include <cmath>
#include <random>

#include "oceanbo/common/error.hpp"
#include "oceanbo/eval/loss.hpp"
#include "oceanbo/eval/metrics.hpp"
#include "oceanbo/eval/rollout.hpp"
#include "oceanbo/eval/train.hpp"

using namespace oceanbo;
using namespace oceanbo::eval;
using fno::Shape4;
using fno::Tensor4;

namespace {

Tensor4 random_tensor(Shape4 s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor4 t(s);
  for (auto& v : t.values()) v = n(rng);
  return t;
}

std::vector<std::uint8_t> disk(int n) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(n * n));
  for (int h = 0; h < n; ++h) {
    for (int w = 0; w < n; ++w) {
      const double y = (h + 0.5) / n - 0.5, x = (w + 0.5) / n - 0.5;
      m[static_cast<std::size_t>(h * n + w)] = x * x + y * y < 0.25;
    }
  }
  return m;
}

const ocean::Ensemble& tiny_ensemble() {
  static const ocean::Ensemble ens = [] {
    ocean::GenConfig g;
    g.n_sims = 5;
    g.timesteps_out = 4;
    g.grid = 8;
    g.seed = 2;
    return ocean::generate_ensemble(g);
  }();
  return ens;
}

hpo::Configuration tiny_config() {
  auto c = baseline_configuration();
  c.set("num_FNO", std::int64_t{2});
  c.set("num_latent_feat", std::int64_t{4});
  c.set("num_modes", std::int64_t{3});
  c.set("proj_size", std::int64_t{4});
  return c;
}

}  // namespace

TEST_CASE("composite loss gradient matches finite differences") {
  const Shape4 s{2, 4, 6, 6};
  const auto mask = disk(6);
  const auto target = random_tensor(s, 1);
  const auto clim = random_tensor({1, 4, 6, 6}, 2).values();
  for (const auto form : {AccForm::kPooled, AccForm::kAbsProduct}) {
    for (const auto mode : {ClimatologyMode::kTraining, ClimatologyMode::kBatchMean}) {
      LossOptions opt{form, mode};
      auto pred = random_tensor(s, 3);
      const auto r = composite_loss(pred, target, clim, mask, 0.3, opt);
      for (std::size_t i = 0; i < pred.size(); i += 7) {
        const double h = 1e-6;
        const double keep = pred.values()[i];
        pred.values()[i] = keep + h;
        const double up = composite_loss(pred, target, clim, mask, 0.3, opt).loss;
        pred.values()[i] = keep - h;
        const double dn = composite_loss(pred, target, clim, mask, 0.3, opt).loss;
        pred.values()[i] = keep;
        CHECK(r.grad.values()[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5).scale(1e-3));
      }
    }
  }
}

TEST_CASE("loss limits and alpha bounds") {
  const Shape4 s{1, 4, 6, 6};
  const auto mask = disk(6);
  const auto target = random_tensor(s, 4);
  const auto clim = std::vector<double>(s.numel(), 0.0);
  const auto r = composite_loss(target, target, clim, mask, 0.5);
  CHECK(r.mse == 0.0);
  CHECK(r.neg_acc == doctest::Approx(-1.0));
  CHECK(composite_loss(target, target, clim, mask, 1.0).loss == 0.0);
  CHECK_THROWS_AS(composite_loss(target, target, clim, mask, 1.5), ConfigError);
  CHECK_THROWS_AS(composite_loss(target, random_tensor({1, 3, 6, 6}, 0), clim, mask, 0.5), ShapeError);
}

TEST_CASE("metric identities") {
  const Shape4 s{3, 4, 6, 6};
  const auto mask = disk(6);
  const auto target = random_tensor(s, 5);
  const auto clim = random_tensor({1, 4, 6, 6}, 6).values();
  const auto perfect = metrics(target, target, clim, mask);
  for (const auto& m : perfect) {
    CHECK(m.rse == 0.0);
    CHECK(m.log_rse == kLogFloor);
    CHECK(m.acc == doctest::Approx(1.0));
  }
  const auto constant = constant_predictor_metrics(target, clim, mask);
  for (const auto& m : constant) {
    CHECK(m.log_rse == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(m.acc == 0.0);
    CHECK(m.acc_degenerate);
  }
}

TEST_CASE("quantile transform uses average ranks") {
  const std::vector<double> v{3.0, 1.0, 3.0, 2.0, 10.0};
  const auto q = quantile_transform(v);
  CHECK(q == std::vector<double>{0.625, 0.0, 0.625, 0.25, 1.0});
  CHECK(quantile_transform(std::vector<double>{4.0}) == std::vector<double>{0.0});
  CHECK(quantile_transform(std::vector<double>{}).empty());
}

TEST_CASE("training is reproducible and reports every epoch") {
  const ocean::PairedDataset data(tiny_ensemble(), ocean::split_simulations(5, ocean::kDefaultRatios, 0));
  TrainOptions opt;
  opt.max_epochs = 3;
  opt.stoppers.constant_predictor = false;
  opt.stoppers.epoch_time = false;
  opt.seed = 4;
  const auto a = train(tiny_config(), data, opt);
  const auto b = train(tiny_config(), data, opt);
  REQUIRE(a.objectives.has_value());
  CHECK_FALSE(a.failure.has_value());
  CHECK(a.reports.size() == 3);
  CHECK(a.objectives == b.objectives);
  CHECK(a.epochs_run == 3);
  CHECK(-a.objectives->neg_mse == a.reports[static_cast<std::size_t>(a.best_epoch - 1)].val_mse);
}

TEST_CASE("zero epochs evaluates the untrained network") {
  const ocean::PairedDataset data(tiny_ensemble(), ocean::split_simulations(5, ocean::kDefaultRatios, 0));
  TrainOptions opt;
  opt.max_epochs = 0;
  const auto r = train(tiny_config(), data, opt);
  CHECK(r.best_epoch == 0);
  CHECK(r.reports.size() == 1);
  REQUIRE(r.objectives.has_value());
}

TEST_CASE("chunked minibatches give the same step as a whole batch") {
  const ocean::PairedDataset data(tiny_ensemble(), ocean::split_simulations(5, ocean::kDefaultRatios, 0));
  TrainOptions opt;
  opt.max_epochs = 1;
  opt.stoppers.constant_predictor = false;
  opt.stoppers.epoch_time = false;
  const auto whole = train(tiny_config(), data, opt);
  opt.activation_budget_bytes = 1;
  const auto chunked = train(tiny_config(), data, opt);
  REQUIRE(whole.objectives.has_value());
  REQUIRE(chunked.objectives.has_value());
  CHECK(chunked.objectives->neg_mse == doctest::Approx(whole.objectives->neg_mse).epsilon(1e-9));
}

TEST_CASE("oversized models fail before training") {
  const ocean::PairedDataset data(tiny_ensemble(), ocean::split_simulations(5, ocean::kDefaultRatios, 0));
  TrainOptions opt;
  opt.parameter_budget_bytes = 1024;
  const auto r = train(tiny_config(), data, opt);
  CHECK(r.failure == std::optional<std::string>("memory_limit"));
  CHECK_FALSE(r.objectives.has_value());
}

TEST_CASE("oracle rollout reaches the log floor and persistence does not") {
  const ocean::PairedDataset data(tiny_ensemble(), ocean::split_simulations(5, ocean::kDefaultRatios, 0));
  const int sim = data.split().test.front();
  const auto r = rollout(oracle_predictor(data), data, sim, 0, 5);
  REQUIRE(r.steps.size() == 5);
  for (int k = 0; k < 3; ++k) {
    CHECK(r.steps[static_cast<std::size_t>(k)].has_truth);
    for (const auto& m : r.steps[static_cast<std::size_t>(k)].metrics) CHECK(m.log_rse == kLogFloor);
  }
  CHECK_FALSE(r.steps[3].has_truth);
  CHECK(r.inputs[1].at(0, 4, 4, 4) == r.inputs[0].at(0, 4, 4, 4));

  const Predictor persist = [](const Tensor4& in, int, int) {
    Tensor4 out(Shape4{1, 4, in.shape().h, in.shape().w});
    std::copy(in.data(), in.data() + out.size(), out.data());
    return out;
  };
  const auto p = rollout(persist, data, sim, 0, 1);
  CHECK(p.steps[0].metrics[0].log_rse > kLogFloor);
}
