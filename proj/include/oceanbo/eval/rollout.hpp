#pragma once

#include <functional>
#include <vector>

#include "oceanbo/eval/metrics.hpp"
#include "oceanbo/fno/model.hpp"
#include "oceanbo/fno/params.hpp"
#include "oceanbo/ocean/dataset.hpp"

namespace oceanbo::eval {

// Maps a normalized (1, 5, H, W) input holding the state at time `t` of
// simulation `sim` to the normalized (1, 4, H, W) next state.
using Predictor = std::function<fno::Tensor4(const fno::Tensor4& input, int sim, int t)>;

Predictor model_predictor(fno::FnoConfig config, fno::ParamSet params);
// Replays the ground truth where it exists and otherwise persists the state.
Predictor oracle_predictor(const ocean::PairedDataset& data);

struct RolloutStep {
  int step = 0;
  // False once t0 + step runs past the simulation; metrics are then empty.
  bool has_truth = false;
  std::vector<VariableMetrics> metrics;
};

struct RolloutResult {
  int sim = 0;
  int t0 = 0;
  std::vector<RolloutStep> steps;
  // inputs[k] is what the predictor saw at step k + 1; predictions[k] its
  // (masked) output.
  std::vector<fno::Tensor4> inputs;
  std::vector<fno::Tensor4> predictions;
};

// Feeds each masked prediction back as the next state with kappa held fixed.
RolloutResult rollout(const Predictor& predictor, const ocean::PairedDataset& data, int sim, int t0, int steps);

}  // namespace oceanbo::eval
