#include "oceanbo/hpo/trial.hpp"

#include <chrono>
#include <cmath>

#include "oceanbo/common/error.hpp"

namespace oceanbo::hpo {

bool ObjectiveVector::finite() const { return std::isfinite(neg_mse) && std::isfinite(acc); }

std::string to_string(Stopper s) {
  switch (s) {
    case Stopper::kNone:
      return "none";
    case Stopper::kConstantPredictor:
      return "constant_predictor";
    case Stopper::kEpochTime:
      return "epoch_time";
  }
  return "none";
}

Stopper stopper_from_string(const std::string& s) {
  if (s == "none") return Stopper::kNone;
  if (s == "constant_predictor") return Stopper::kConstantPredictor;
  if (s == "epoch_time") return Stopper::kEpochTime;
  throw FormatError("unknown stopper '" + s + "'");
}

namespace {

nlohmann::json objectives_json(const std::optional<ObjectiveVector>& o) {
  if (!o) return nullptr;
  return {{"neg_mse", o->neg_mse}, {"acc", o->acc}};
}

std::optional<ObjectiveVector> objectives_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return ObjectiveVector{j.at("neg_mse").get<double>(), j.at("acc").get<double>()};
}

}  // namespace

nlohmann::json to_json(const TrialRecord& r) {
  nlohmann::json j;
  j["type"] = "trial";
  j["trial_id"] = r.trial_id;
  j["status"] = r.ok() ? "ok" : "failed";
  j["config"] = to_json(r.config);
  j["objectives"] = objectives_json(r.objectives);
  j["failure"] = r.failure ? nlohmann::json(*r.failure) : nlohmann::json(nullptr);
  j["imputed"] = objectives_json(r.imputed);
  j["epochs_run"] = r.epochs_run;
  j["stopper"] = to_string(r.stopper);
  j["wall_seconds"] = r.wall_seconds;
  j["seed"] = r.seed;
  j["submit_time"] = r.submit_time;
  j["start_time"] = r.start_time;
  j["finish_time"] = r.finish_time;
  return j;
}

TrialRecord trial_from_json(const nlohmann::json& j) {
  TrialRecord r;
  r.trial_id = j.at("trial_id").get<std::int64_t>();
  r.config = config_from_json(j.at("config"));
  r.objectives = objectives_from(j.value("objectives", nlohmann::json(nullptr)));
  const auto& failure = j.value("failure", nlohmann::json(nullptr));
  if (!failure.is_null()) r.failure = failure.get<std::string>();
  r.imputed = objectives_from(j.value("imputed", nlohmann::json(nullptr)));
  r.epochs_run = j.value("epochs_run", std::int64_t{0});
  r.stopper = stopper_from_string(j.value("stopper", std::string("none")));
  r.wall_seconds = j.value("wall_seconds", 0.0);
  r.seed = j.value("seed", std::uint64_t{0});
  r.submit_time = j.value("submit_time", 0.0);
  r.start_time = j.value("start_time", 0.0);
  r.finish_time = j.value("finish_time", 0.0);
  if (!r.objectives && !r.failure) r.failure = "unknown";
  return r;
}

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

}  // namespace oceanbo::hpo
