#include "oceanbo/hpo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "oceanbo/common/error.hpp"

namespace oceanbo::hpo {

nlohmann::json to_json(const OptimizerSettings& s) {
  nlohmann::json j;
  j["n_initial"] = s.n_initial;
  j["candidate_pool_size"] = s.candidate_pool_size;
  j["n_perturbations"] = s.n_perturbations;
  j["perturbation_sigma"] = s.perturbation_sigma;
  j["c_mean"] = s.c_mean;
  j["scalarization"] = s.scalarization == Scalarization::kLinear ? "linear" : "chebyshev";
  j["forest"] = {{"n_trees", s.forest.n_trees},
                 {"min_samples_split", s.forest.min_samples_split},
                 {"max_features", s.forest.max_features}};
  j["seed"] = s.seed;
  j["fixed_c"] = s.fixed_c ? nlohmann::json(*s.fixed_c) : nlohmann::json(nullptr);
  return j;
}

OptimizerSettings optimizer_settings_from_json(const nlohmann::json& j) {
  OptimizerSettings s;
  s.n_initial = j.value("n_initial", s.n_initial);
  s.candidate_pool_size = j.value("candidate_pool_size", s.candidate_pool_size);
  s.n_perturbations = j.value("n_perturbations", s.n_perturbations);
  s.perturbation_sigma = j.value("perturbation_sigma", s.perturbation_sigma);
  s.c_mean = j.value("c_mean", s.c_mean);
  const std::string mode = j.value("scalarization", std::string("linear"));
  if (mode != "linear" && mode != "chebyshev") throw ConfigError("unknown scalarization '" + mode + "'");
  s.scalarization = mode == "linear" ? Scalarization::kLinear : Scalarization::kChebyshev;
  if (j.contains("forest")) {
    const auto& f = j.at("forest");
    s.forest.n_trees = f.value("n_trees", s.forest.n_trees);
    s.forest.min_samples_split = f.value("min_samples_split", s.forest.min_samples_split);
    s.forest.max_features = f.value("max_features", s.forest.max_features);
  }
  s.seed = j.value("seed", s.seed);
  if (j.contains("fixed_c") && !j.at("fixed_c").is_null()) s.fixed_c = j.at("fixed_c").get<double>();
  return s;
}

double sample_c(Rng& rng, double c_mean) {
  if (!(c_mean > 0.0)) throw ConfigError("c_mean must be positive");
  std::exponential_distribution<double> exp(1.0 / c_mean);
  return exp(rng);
}

Weights sample_weights(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double w = unit(rng);
  return {w, 1.0 - w};
}

double scalarize(const ObjectiveVector& objectives, const Weights& weights, const ObjectiveBounds& bounds,
                 Scalarization mode) {
  const std::array<double, 2> raw{objectives.neg_mse, objectives.acc};
  std::array<double, 2> z{};
  for (int k = 0; k < 2; ++k) {
    const double lo = bounds.lo[static_cast<std::size_t>(k)];
    const double hi = bounds.hi[static_cast<std::size_t>(k)];
    if (std::isfinite(lo) && std::isfinite(hi) && lo < hi) {
      z[static_cast<std::size_t>(k)] = (raw[static_cast<std::size_t>(k)] - lo) / (hi - lo);
    } else {
      z[static_cast<std::size_t>(k)] = 0.5;
    }
  }
  const double linear = weights[0] * z[0] + weights[1] * z[1];
  if (mode == Scalarization::kLinear) return linear;
  return std::min(weights[0] * z[0], weights[1] * z[1]) + 0.05 * linear;
}

ObjectiveBounds observed_bounds(const std::vector<ObjectiveVector>& values) {
  ObjectiveBounds b;
  b.lo = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  b.hi = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& v : values) {
    b.lo[0] = std::min(b.lo[0], v.neg_mse);
    b.hi[0] = std::max(b.hi[0], v.neg_mse);
    b.lo[1] = std::min(b.lo[1], v.acc);
    b.hi[1] = std::max(b.hi[1], v.acc);
  }
  return b;
}

std::vector<double> sample_encoded(const SearchSpace& space, Rng& rng) {
  std::vector<double> out;
  out.reserve(space.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& d : space.dimensions()) {
    if (const auto* c = std::get_if<CategoricalDim>(&d.kind)) {
      const auto n = c->choices.size();
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      out.push_back(n == 1 ? 0.0 : static_cast<double>(pick(rng)) / static_cast<double>(n - 1));
    } else if (const auto* i = std::get_if<IntegerDim>(&d.kind)) {
      std::uniform_int_distribution<std::int64_t> pick(i->first(), i->last());
      const auto span = i->last() - i->first();
      const auto v = pick(rng);
      out.push_back(span == 0 ? 0.0 : static_cast<double>(v - i->first()) / static_cast<double>(span));
    } else {
      out.push_back(unit(rng));
    }
  }
  return out;
}

BayesianOptimizer::BayesianOptimizer(SearchSpace space, OptimizerSettings settings)
    : space_(std::move(space)), settings_(std::move(settings)) {
  if (settings_.n_initial < 0) throw ConfigError("n_initial must be >= 0");
  if (settings_.candidate_pool_size < 1) throw ConfigError("candidate_pool_size must be >= 1");
  if (settings_.n_perturbations < 0) throw ConfigError("n_perturbations must be >= 0");
  if (!(settings_.c_mean > 0.0)) throw ConfigError("c_mean must be positive");
}

void BayesianOptimizer::tell(TrialRecord trial) {
  for (const auto& h : history_) {
    if (h.trial_id == trial.trial_id) {
      throw ConfigError("trial " + std::to_string(trial.trial_id) + " was already told");
    }
  }
  if (!trial.ok() && !trial.imputed) {
    std::vector<ObjectiveVector> successes;
    for (const auto& h : history_) {
      if (h.ok()) successes.push_back(*h.objectives);
    }
    if (!successes.empty()) {
      const auto b = observed_bounds(successes);
      trial.imputed = ObjectiveVector{b.lo[0], b.lo[1]};
    }
  }
  history_.push_back(std::move(trial));
}

void BayesianOptimizer::training_data(forest::RowMatrix& x, std::vector<ObjectiveVector>& y) const {
  std::vector<ObjectiveVector> successes;
  for (const auto& h : history_) {
    if (h.ok()) successes.push_back(*h.objectives);
  }
  std::optional<ObjectiveVector> worst;
  if (!successes.empty()) {
    const auto b = observed_bounds(successes);
    worst = ObjectiveVector{b.lo[0], b.lo[1]};
  }
  y.clear();
  std::vector<const TrialRecord*> rows;
  for (const auto& h : history_) {
    auto eff = h.effective();
    if (!eff) eff = worst;
    if (!eff) continue;
    rows.push_back(&h);
    y.push_back(*eff);
  }
  x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(space_.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto enc = encode(space_, rows[r]->config);
    for (std::size_t c = 0; c < enc.size(); ++c) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = enc[c];
    }
  }
}

Proposal BayesianOptimizer::propose(Rng& rng, const forest::RowMatrix& x,
                                    const std::vector<ObjectiveVector>& y, bool keep_pool) {
  Proposal p;
  p.model_based = true;
  p.weights = sample_weights(rng);
  p.c = settings_.fixed_c ? *settings_.fixed_c : sample_c(rng, settings_.c_mean);
  p.forest_seed = rng();

  const auto bounds = observed_bounds(y);
  std::vector<double> targets(y.size());
  std::size_t incumbent = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    targets[i] = scalarize(y[i], p.weights, bounds, settings_.scalarization);
    if (targets[i] > targets[incumbent]) incumbent = i;
  }
  forest::ForestConfig fc = settings_.forest;
  fc.seed = p.forest_seed;
  const auto model = forest::ExtraTreesRegressor::fit(x, targets, fc);

  std::vector<std::vector<double>> pool;
  pool.reserve(static_cast<std::size_t>(settings_.candidate_pool_size + settings_.n_perturbations));
  for (int i = 0; i < settings_.candidate_pool_size; ++i) pool.push_back(sample_encoded(space_, rng));

  std::normal_distribution<double> noise(0.0, settings_.perturbation_sigma);
  const auto d = static_cast<std::size_t>(x.cols());
  std::vector<double> best(d);
  for (std::size_t c = 0; c < d; ++c) best[c] = x(static_cast<Eigen::Index>(incumbent), static_cast<Eigen::Index>(c));
  for (int i = 0; i < settings_.n_perturbations; ++i) {
    std::vector<double> v = best;
    for (double& e : v) e = std::clamp(e + noise(rng), 0.0, 1.0);
    pool.push_back(encode(space_, decode(space_, v)));
  }

  std::vector<double> scores(pool.size());
  std::size_t arg = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto ms = model.predict_mean_std(pool[i]);
    scores[i] = ucb(ms.mean, ms.std, p.c);
    if (scores[i] > scores[arg]) arg = i;
  }
  p.config = decode(space_, pool[arg]);
  p.chosen = arg;
  if (keep_pool) {
    p.pool = std::move(pool);
    p.scores = std::move(scores);
  }
  return p;
}

std::vector<Proposal> BayesianOptimizer::ask_detailed(int q, bool keep_pool) {
  if (q < 1) throw ConfigError("ask: q must be >= 1");
  if (history_.empty() && settings_.n_initial == 0) {
    throw ConfigError("ask: empty history with n_initial = 0 leaves nothing to model");
  }
  Rng rng(derive_seed(settings_.seed, ask_counter_++));

  forest::RowMatrix x;
  std::vector<ObjectiveVector> y;
  const bool model_based = static_cast<int>(history_.size()) >= settings_.n_initial;
  if (model_based) training_data(x, y);

  std::vector<Proposal> out;
  std::set<std::vector<double>> seen;
  for (int k = 0; k < q; ++k) {
    Proposal p;
    for (int attempt = 0; attempt < 2; ++attempt) {
      if (model_based && !y.empty()) {
        p = propose(rng, x, y, keep_pool);
      } else {
        p = Proposal{};
        p.config = decode(space_, sample_encoded(space_, rng));
      }
      if (!seen.count(encode(space_, p.config))) break;
    }
    seen.insert(encode(space_, p.config));
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Configuration> BayesianOptimizer::ask(int q) {
  std::vector<Configuration> out;
  for (auto& p : ask_detailed(q, false)) out.push_back(std::move(p.config));
  return out;
}

}  // namespace oceanbo::hpo
