#include <doctest.h>

#include <algorithm>
#include <set>

#include "oceanbo/common/error.hpp"
#include "oceanbo/hpo/optimizer.hpp"
#include "oceanbo/hpo/pareto.hpp"
#include "oceanbo/hpo/space.hpp"
#include "oceanbo/hpo/synthetic.hpp"

using namespace oceanbo;
using namespace oceanbo::hpo;

TEST_CASE("space json round trip keeps order and hash") {
  const auto space = default_space();
  const auto back = space_from_json(nlohmann::json::parse(to_json(space).dump()));
  CHECK(back == space);
  CHECK(back.hash() == space.hash());
  CHECK(space.size() == 15);
  CHECK(space.dimensions().front().name == "padding");
  CHECK(space.dimensions().back().name == "batch_size");
}

TEST_CASE("encode and decode are inverse on sampled configurations") {
  const auto space = default_space();
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto c = sample_random(space, rng);
    CHECK(space.validates(c));
    const auto x = encode(space, c);
    for (double v : x) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    const auto d = decode(space, x);
    for (const auto& dim : space.dimensions()) {
      if (dim.is_float()) {
        CHECK(d.get_double(dim.name) == doctest::Approx(c.get_double(dim.name)).epsilon(1e-12));
      } else {
        CHECK(d.at(dim.name) == c.at(dim.name));
      }
    }
  }
}

TEST_CASE("decode clips and rounds") {
  const auto space = default_space();
  std::vector<double> x(space.size(), 2.0);
  const auto c = decode(space, x);
  CHECK(c.get_int("num_FNO") == 16);
  CHECK(c.get_string("padding") == "False");
  x.assign(space.size(), -1.0);
  CHECK(decode(space, x).get_int("batch_size") == 2);
}

TEST_CASE("validation lists every offending field") {
  const auto space = default_space();
  Rng rng(1);
  auto c = sample_random(space, rng);
  c.set("num_FNO", std::int64_t{40});
  c.set("optimizer", std::string("Lion"));
  const auto err = space.validation_errors(c);
  CHECK(err.find("num_FNO") != std::string::npos);
  CHECK(err.find("optimizer") != std::string::npos);
  CHECK(err.find("lr") == std::string::npos);
}

TEST_CASE("config json accepts booleans for flag dimensions") {
  const auto space = default_space();
  Rng rng(2);
  auto j = to_json(sample_random(space, rng));
  j["padding"] = true;
  const auto c = config_from_json(space, j);
  CHECK(c.get_string("padding") == "True");
  CHECK(c.get_flag("padding"));
}

TEST_CASE("scalarization normalizes over the bounds") {
  ObjectiveBounds b;
  b.lo = {-4.0, 0.0};
  b.hi = {0.0, 1.0};
  CHECK(scalarize({-2.0, 0.5}, {0.5, 0.5}, b) == doctest::Approx(0.5));
  CHECK(scalarize({0.0, 0.0}, {1.0, 0.0}, b) == doctest::Approx(1.0));
  // Degenerate range maps to 0.5.
  ObjectiveBounds flat;
  CHECK(scalarize({3.0, 3.0}, {0.3, 0.7}, flat) == doctest::Approx(0.5));
  const double cheb = scalarize({-2.0, 1.0}, {0.5, 0.5}, b, Scalarization::kChebyshev);
  CHECK(cheb == doctest::Approx(0.25 + 0.05 * 0.75));
}

TEST_CASE("exponential exploration weight has the requested mean") {
  Rng rng(11);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double c = sample_c(rng, 1.96);
    CHECK_FALSE(c < 0.0);
    sum += c;
  }
  CHECK(sum / n == doctest::Approx(1.96).epsilon(0.01));
}

TEST_CASE("simplex weights sum to one") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto w = sample_weights(rng);
    CHECK(w[0] + w[1] == doctest::Approx(1.0));
    CHECK(w[0] >= 0.0);
  }
}

namespace {

TrialRecord ok_trial(std::int64_t id, Configuration c, double a, double b) {
  TrialRecord r;
  r.trial_id = id;
  r.config = std::move(c);
  r.objectives = ObjectiveVector{a, b};
  return r;
}

}  // namespace

TEST_CASE("optimizer is deterministic for a seed and history") {
  const auto space = synthetic_space();
  OptimizerSettings s;
  s.seed = 9;
  s.n_initial = 4;
  BayesianOptimizer a(space, s), b(space, s);
  for (int round = 0; round < 4; ++round) {
    const auto ca = a.ask(2);
    const auto cb = b.ask(2);
    REQUIRE(ca.size() == 2);
    CHECK(ca == cb);
    for (const auto& c : ca) {
      const auto o = synthetic_objectives(space, c);
      const auto id = static_cast<std::int64_t>(a.history().size());
      a.tell(ok_trial(id, c, o.neg_mse, o.acc));
      b.tell(ok_trial(id, c, o.neg_mse, o.acc));
    }
  }
  CHECK(a.ask_counter() == 4);
}

TEST_CASE("model based proposals after the initial design") {
  const auto space = synthetic_space();
  OptimizerSettings s;
  s.n_initial = 3;
  s.candidate_pool_size = 64;
  s.n_perturbations = 8;
  BayesianOptimizer opt(space, s);
  auto first = opt.ask_detailed(3);
  for (const auto& p : first) CHECK_FALSE(p.model_based);
  for (const auto& p : first) {
    const auto o = synthetic_objectives(space, p.config);
    opt.tell(ok_trial(static_cast<std::int64_t>(opt.history().size()), p.config, o.neg_mse, o.acc));
  }
  const auto next = opt.ask_detailed(2, true);
  for (const auto& p : next) {
    CHECK(p.model_based);
    CHECK(p.pool.size() == 72);
    CHECK(p.scores[p.chosen] == *std::max_element(p.scores.begin(), p.scores.end()));
    CHECK(p.weights[0] + p.weights[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("failed trials are imputed at the componentwise worst") {
  const auto space = synthetic_space();
  BayesianOptimizer opt(space, {});
  Rng rng(0);
  opt.tell(ok_trial(0, sample_random(space, rng), -1.0, 0.2));
  opt.tell(ok_trial(1, sample_random(space, rng), -3.0, 0.9));
  TrialRecord bad;
  bad.trial_id = 2;
  bad.config = sample_random(space, rng);
  bad.failure = "divergence";
  opt.tell(bad);
  REQUIRE(opt.history()[2].imputed.has_value());
  CHECK(opt.history()[2].imputed->neg_mse == -3.0);
  CHECK(opt.history()[2].imputed->acc == 0.2);
}

TEST_CASE("pareto front on a small set") {
  const std::vector<Point2> pts{{1, 5}, {2, 4}, {2, 4}, {0, 0}, {3, 1}, {1, 4}};
  CHECK(non_dominated(pts) == std::vector<std::size_t>{0, 1, 2, 4});
}

TEST_CASE("hypervolume of a staircase") {
  const std::vector<Point2> front{{1, 3}, {2, 2}, {3, 1}};
  CHECK(hypervolume2d(front, {0, 0}) == doctest::Approx(6.0));
  CHECK(hypervolume2d({}, {0, 0}) == 0.0);
  CHECK_THROWS_AS(hypervolume2d({{-1, 1}}, {0, 0}), ConfigError);
}

TEST_CASE("pareto_front skips failures and orders by id") {
  const auto space = synthetic_space();
  Rng rng(4);
  std::vector<TrialRecord> t{ok_trial(3, sample_random(space, rng), -1, 1), ok_trial(1, sample_random(space, rng), -2, 2),
                             ok_trial(2, sample_random(space, rng), -3, 0)};
  TrialRecord f;
  f.trial_id = 0;
  f.failure = "divergence";
  f.objectives = ObjectiveVector{100, 100};
  t.push_back(f);
  const auto front = pareto_front(t);
  REQUIRE(front.size() == 2);
  CHECK(front[0].trial_id == 1);
  CHECK(front[1].trial_id == 3);
}

TEST_CASE("trial records survive json") {
  const auto space = default_space();
  Rng rng(8);
  auto r = ok_trial(5, sample_random(space, rng), -0.25, 0.75);
  r.stopper = Stopper::kEpochTime;
  r.failure = "epoch_time";
  r.imputed = ObjectiveVector{-1, 0};
  r.seed = 77;
  const auto back = trial_from_json(nlohmann::json::parse(to_json(r).dump()));
  CHECK(back.trial_id == 5);
  CHECK(back.config == r.config);
  CHECK(back.objectives == r.objectives);
  CHECK(back.failure == r.failure);
  CHECK(back.imputed == r.imputed);
  CHECK(back.stopper == Stopper::kEpochTime);
  CHECK(back.seed == 77);
}
