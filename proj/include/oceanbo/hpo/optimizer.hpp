#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "oceanbo/forest/extra_trees.hpp"
#include "oceanbo/hpo/space.hpp"
#include "oceanbo/hpo/trial.hpp"

namespace oceanbo::hpo {

enum class Scalarization { kLinear, kChebyshev };

struct OptimizerSettings {
  int n_initial = 10;
  int candidate_pool_size = 2048;
  int n_perturbations = 256;
  // Std of the Gaussian perturbations of the incumbent, in encoded units.
  double perturbation_sigma = 0.05;
  // Mean of the exponential distribution that c is drawn from.
  double c_mean = 1.96;
  Scalarization scalarization = Scalarization::kLinear;
  forest::ForestConfig forest;
  std::uint64_t seed = 0;
  // Overrides the exponential draw of c when set.
  std::optional<double> fixed_c;
};

nlohmann::json to_json(const OptimizerSettings& s);
OptimizerSettings optimizer_settings_from_json(const nlohmann::json& j);

using Weights = std::array<double, 2>;

// Per-objective observed range used for min-max normalization.
struct ObjectiveBounds {
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{0.0, 0.0};
};

inline double ucb(double mu, double sigma, double c) { return mu + c * sigma; }

// One draw from Exponential(mean = c_mean).
double sample_c(Rng& rng, double c_mean);

// Uniform on the 2-simplex.
Weights sample_weights(Rng& rng);

// Min-max normalizes each objective over `bounds` (0.5 when the range is
// empty or non-finite), then applies w.z (linear) or
// min_j(w_j z_j) + 0.05 sum_j w_j z_j (augmented Chebyshev).
double scalarize(const ObjectiveVector& objectives, const Weights& weights,
                 const ObjectiveBounds& bounds, Scalarization mode = Scalarization::kLinear);

ObjectiveBounds observed_bounds(const std::vector<ObjectiveVector>& values);

// Draws a configuration directly in encoded coordinates; equal in
// distribution to encode(sample_random(space, rng)).
std::vector<double> sample_encoded(const SearchSpace& space, Rng& rng);

// Diagnostics of one model-based proposal.
struct Proposal {
  Configuration config;
  bool model_based = false;
  Weights weights{0.5, 0.5};
  double c = 0.0;
  std::uint64_t forest_seed = 0;
  // Filled only when requested: encoded candidates and their UCB scores.
  std::vector<std::vector<double>> pool;
  std::vector<double> scores;
  std::size_t chosen = 0;
};

// Centralized ask/tell Bayesian optimizer: random initial design, then
// qUCB proposals on an extremely-randomized-trees surrogate of a freshly
// randomized scalarization of the two objectives.
class BayesianOptimizer {
 public:
  BayesianOptimizer(SearchSpace space, OptimizerSettings settings);

  std::vector<Configuration> ask(int q);
  std::vector<Proposal> ask_detailed(int q, bool keep_pool = false);

  // Appends a finished trial. Failed trials without imputed objectives get
  // the componentwise worst successful objectives observed so far.
  void tell(TrialRecord trial);

  const SearchSpace& space() const { return space_; }
  const OptimizerSettings& settings() const { return settings_; }
  const std::vector<TrialRecord>& history() const { return history_; }

  // Number of ask() calls so far; every call draws from a stream seeded by
  // (settings.seed, counter), so (seed, history, counter) fixes the output.
  std::uint64_t ask_counter() const { return ask_counter_; }
  void set_ask_counter(std::uint64_t n) { ask_counter_ = n; }

  // Training set the surrogate would see: encoded configs and effective
  // objectives (failed trials use their imputed values).
  void training_data(forest::RowMatrix& x, std::vector<ObjectiveVector>& y) const;

 private:
  Proposal propose(Rng& rng, const forest::RowMatrix& x, const std::vector<ObjectiveVector>& y,
                   bool keep_pool);

  SearchSpace space_;
  OptimizerSettings settings_;
  std::vector<TrialRecord> history_;
  std::uint64_t ask_counter_ = 0;
};

}  // namespace oceanbo::hpo
