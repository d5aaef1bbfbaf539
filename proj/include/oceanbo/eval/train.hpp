#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oceanbo/eval/loss.hpp"
#include "oceanbo/eval/metrics.hpp"
#include "oceanbo/fno/model.hpp"
#include "oceanbo/fno/params.hpp"
#include "oceanbo/hpo/space.hpp"
#include "oceanbo/hpo/trial.hpp"
#include "oceanbo/ocean/dataset.hpp"

namespace oceanbo::eval {

struct StopperConfig {
  bool constant_predictor = true;
  // Checked once, after this epoch.
  int grace_epochs = 10;
  bool epoch_time = true;
  double epoch_time_limit_s = 10.0;
};

void validate(const StopperConfig& s);
nlohmann::json to_json(const StopperConfig& s);
StopperConfig stopper_config_from_json(const nlohmann::json& j);

struct EpochReport {
  int epoch = 0;
  double train_loss = 0.0;
  double val_mse = 0.0;
  double val_neg_acc = 0.0;
  std::array<double, 4> val_rse{};
  std::array<double, 4> val_acc{};
  double epoch_seconds = 0.0;
};

nlohmann::json to_json(const EpochReport& r);

struct TrainOptions {
  int max_epochs = 30;
  StopperConfig stoppers;
  LossOptions loss;
  std::uint64_t seed = 0;
  int pad_width = 8;
  // Replaces the configuration's alpha when set.
  std::optional<double> alpha;
  // Bound on forward/backward intermediates; larger minibatches are
  // processed in chunks.
  std::size_t activation_budget_bytes = std::size_t{256} << 20;
  // Trials whose parameters and optimizer buffers would exceed this fail
  // with reason "memory_limit" before training starts.
  std::size_t parameter_budget_bytes = std::size_t{768} << 20;
  std::function<void(const EpochReport&)> on_epoch;
};

struct TrainResult {
  // Best-epoch objectives; also filled for stopped trials when at least one
  // epoch finished.
  std::optional<hpo::ObjectiveVector> objectives;
  std::optional<std::string> failure;
  hpo::Stopper stopper = hpo::Stopper::kNone;
  int epochs_run = 0;
  int best_epoch = -1;
  std::vector<EpochReport> reports;
  fno::FnoConfig fno_config;
  fno::ParamSet best_params;
  std::vector<VariableMetrics> best_val_metrics;
  double constant_val_mse = 0.0;
  double wall_seconds = 0.0;
};

// The documented reference architecture and training settings.
hpo::Configuration baseline_configuration();

// Validation quantities of a parameter set on a list of pairs.
struct Evaluation {
  double mse = 0.0;
  double acc = 0.0;
  std::vector<VariableMetrics> per_variable;
};

Evaluation evaluate(const fno::FnoConfig& config, const fno::ParamSet& params, const ocean::PairedDataset& data,
                    const std::vector<ocean::Pair>& pairs, std::size_t activation_budget_bytes = std::size_t{256} << 20);

// Samples per forward/backward chunk within the activation budget.
int chunk_size(const fno::FnoConfig& config, int height, int width, std::size_t budget_bytes);
// Parameter, gradient and two optimizer buffers.
std::size_t training_parameter_bytes(const fno::FnoConfig& config);

TrainResult train(const hpo::Configuration& config, const ocean::PairedDataset& data, const TrainOptions& options);

}  // namespace oceanbo::eval
