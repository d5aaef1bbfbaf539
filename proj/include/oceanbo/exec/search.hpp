#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oceanbo/exec/results_log.hpp"
#include "oceanbo/exec/workers.hpp"
#include "oceanbo/hpo/optimizer.hpp"

namespace oceanbo::exec {

struct SearchRun {
  hpo::SearchSpace space;
  hpo::OptimizerSettings settings;
  int workers = 1;
  int budget = 1;
  std::uint64_t seed = 0;
  // Passed to the evaluator with every job.
  nlohmann::json job_params = nlohmann::json::object();
  std::string log_path;
};

// Random configurations before the surrogate takes over.
inline int default_initial_design(int workers) { return std::max(2 * workers, 10); }

// Training seed of a trial, independent of scheduling.
std::uint64_t trial_seed(std::uint64_t run_seed, std::int64_t trial_id);

struct SearchSummary {
  std::vector<hpo::TrialRecord> trials;
  int replayed = 0;
  int reissued = 0;
};

using TrialCallback = std::function<void(const hpo::TrialRecord&)>;

// Asks `workers` initial configurations, then one fresh proposal per freed
// worker, until `budget` trials are logged.
SearchSummary run_search(const SearchRun& run, WorkerPool& pool, const TrialCallback& on_trial = {});

// Replays a log into the optimizer, re-issues trials that were in flight
// with their original ids, configurations and seeds, and continues to the
// logged budget. A complete log is left untouched. Refuses when
// `expected_space` is given and its hash differs from the header's.
SearchSummary resume_search(const std::string& log_path, WorkerPool& pool,
                            const std::optional<hpo::SearchSpace>& expected_space = std::nullopt,
                            const TrialCallback& on_trial = {});

// Evaluators selected by job_params["evaluator"]:
//   "synthetic": the two-objective test function of the space, sleeping
//                job_params["delay"] seconds (scaled by a seeded factor in
//                [0.5, 1.5) when job_params["jitter"] is true);
//   "diverge":   every trial fails with reason "divergence";
//   "train":     trains an FNO on job_params["data"] (see train_job_options).
// job_params["crash_trials"] lists trial ids whose worker process dies.
Evaluator make_evaluator(const hpo::SearchSpace& space, const nlohmann::json& job_params);

}  // namespace oceanbo::exec
