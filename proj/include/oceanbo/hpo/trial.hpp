#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "oceanbo/hpo/space.hpp"

namespace oceanbo::hpo {

// Both entries are maximized.
struct ObjectiveVector {
  double neg_mse = 0.0;
  double acc = 0.0;

  bool finite() const;
  bool operator==(const ObjectiveVector&) const = default;
};

enum class Stopper { kNone, kConstantPredictor, kEpochTime };

std::string to_string(Stopper s);
Stopper stopper_from_string(const std::string& s);

struct TrialRecord {
  std::int64_t trial_id = -1;
  Configuration config;
  // Set for successful trials.
  std::optional<ObjectiveVector> objectives;
  // Set for failed trials: a stopper tag ("constant_predictor",
  // "epoch_time") or an error reason ("divergence", "worker_died: ...").
  std::optional<std::string> failure;
  // Objectives substituted for a failed trial when it entered the
  // optimizer history (componentwise worst observed at that point).
  std::optional<ObjectiveVector> imputed;
  std::int64_t epochs_run = 0;
  Stopper stopper = Stopper::kNone;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  double submit_time = 0.0;
  double start_time = 0.0;
  double finish_time = 0.0;

  bool ok() const { return objectives.has_value() && !failure.has_value(); }
  // Objectives the optimizer sees: real ones, else the imputed ones.
  std::optional<ObjectiveVector> effective() const { return ok() ? objectives : imputed; }
};

nlohmann::json to_json(const TrialRecord& r);
TrialRecord trial_from_json(const nlohmann::json& j);

// Seconds since the Unix epoch.
double now_seconds();

}  // namespace oceanbo::hpo
