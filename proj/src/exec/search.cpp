#include "oceanbo/exec/search.hpp"

#include <algorithm>
#include <chrono>
#include <csignal>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include <unistd.h>

#include "oceanbo/common/error.hpp"
#include "oceanbo/common/seed.hpp"
#include "oceanbo/eval/train.hpp"
#include "oceanbo/hpo/synthetic.hpp"
#include "oceanbo/ocean/dataset.hpp"

namespace oceanbo::exec {

namespace {

struct ManagerState {
  hpo::BayesianOptimizer optimizer;
  LogHeader header;
  std::string log_path;
  std::int64_t dispatched = 0;
  std::int64_t logged = 0;
  std::deque<Job> reissue;
};

SearchSummary manage(ManagerState& st, WorkerPool& pool, const TrialCallback& on_trial) {
  SearchSummary summary;
  const std::int64_t budget = st.header.budget;
  if (st.logged >= budget) {
    summary.trials = st.optimizer.history();
    return summary;
  }
  LineWriter log(st.log_path);
  LineWriter journal(pending_path(st.log_path));

  std::vector<int> idle;
  for (int w = pool.size() - 1; w >= 0; --w) idle.push_back(w);

  auto dispatch = [&](Job job, bool journal_it, std::uint64_t counter) {
    const int w = idle.back();
    idle.pop_back();
    job.submit_time = hpo::now_seconds();
    job.params = st.header.job_params;
    if (journal_it) journal.append(to_json(PendingEntry{job.trial_id, job.config, job.seed, counter}));
    pool.submit(w, job);
  };

  while (st.logged < budget) {
    while (!idle.empty() && !st.reissue.empty()) {
      dispatch(st.reissue.front(), false, 0);
      st.reissue.pop_front();
      ++summary.reissued;
    }
    while (!idle.empty() && st.dispatched < budget) {
      // The opening batch is one q-point ask; afterwards each freed worker
      // gets its own fresh proposal.
      const int q = st.dispatched == 0
                        ? static_cast<int>(std::min<std::int64_t>(static_cast<std::int64_t>(idle.size()), budget))
                        : 1;
      const auto configs = st.optimizer.ask(q);
      const auto counter = st.optimizer.ask_counter();
      for (const auto& c : configs) {
        Job job;
        job.trial_id = st.dispatched++;
        job.config = c;
        job.seed = trial_seed(st.header.seed, job.trial_id);
        dispatch(std::move(job), true, counter);
      }
    }
    if (pool.busy() == 0) break;
    auto [w, res] = pool.wait_any();
    idle.push_back(w);
    st.optimizer.tell(std::move(res.record));
    const auto& rec = st.optimizer.history().back();
    log.append(hpo::to_json(rec));
    ++st.logged;
    if (on_trial) on_trial(rec);
  }
  // Anything still running past the budget is abandoned with the pool.
  summary.trials = st.optimizer.history();
  return summary;
}

hpo::OptimizerSettings seeded(hpo::OptimizerSettings s, std::uint64_t seed) {
  s.seed = seed;
  return s;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t run_seed, std::int64_t trial_id) {
  return derive_seed(run_seed, static_cast<std::uint64_t>(trial_id));
}

SearchSummary run_search(const SearchRun& run, WorkerPool& pool, const TrialCallback& on_trial) {
  if (run.workers < 1) throw ConfigError("search needs at least one worker");
  if (run.budget < run.workers) {
    throw ConfigError("budget (" + std::to_string(run.budget) + ") must be >= the worker count (" +
                      std::to_string(run.workers) + ")");
  }
  if (pool.size() < run.workers) throw ConfigError("worker pool is smaller than the requested worker count");
  LogHeader header;
  header.space = run.space;
  header.settings = seeded(run.settings, run.seed);
  header.seed = run.seed;
  header.budget = run.budget;
  header.workers = run.workers;
  header.job_params = run.job_params;
  header.space_hash = run.space.hash();
  header.code_version = OCEANBO_VERSION;
  create_log(run.log_path, header);

  ManagerState st{hpo::BayesianOptimizer(header.space, header.settings), header, run.log_path, 0, 0, {}};
  return manage(st, pool, on_trial);
}

SearchSummary resume_search(const std::string& log_path, WorkerPool& pool,
                            const std::optional<hpo::SearchSpace>& expected_space, const TrialCallback& on_trial) {
  auto contents = read_log(log_path, true);
  if (expected_space && expected_space->hash() != contents.header.space_hash) {
    throw ConfigError("refusing to resume '" + log_path + "': search space hash " + expected_space->hash() +
                      " differs from the logged " + contents.header.space_hash);
  }
  const auto pending = read_pending(pending_path(log_path), true);

  ManagerState st{hpo::BayesianOptimizer(contents.header.space, contents.header.settings), contents.header, log_path,
                  0, 0, {}};
  std::set<std::int64_t> done;
  for (auto& rec : contents.trials) {
    done.insert(rec.trial_id);
    st.optimizer.tell(rec);
  }
  st.logged = static_cast<std::int64_t>(contents.trials.size());
  std::uint64_t counter = 0;
  std::int64_t max_id = -1;
  for (const auto& e : pending) {
    counter = std::max(counter, e.ask_counter);
    max_id = std::max(max_id, e.trial_id);
    if (!done.count(e.trial_id)) {
      Job job;
      job.trial_id = e.trial_id;
      job.config = e.config;
      job.seed = e.seed;
      st.reissue.push_back(std::move(job));
    }
  }
  for (const auto& rec : contents.trials) max_id = std::max(max_id, rec.trial_id);
  st.dispatched = max_id + 1;
  st.optimizer.set_ask_counter(counter);

  SearchSummary s = manage(st, pool, on_trial);
  s.replayed = static_cast<int>(contents.trials.size());
  return s;
}

namespace {

struct CachedData {
  std::string key;
  std::shared_ptr<const ocean::PairedDataset> data;
};

std::shared_ptr<const ocean::PairedDataset> load_dataset_cached(const std::string& path, std::uint64_t split_seed) {
  static std::mutex mu;
  static CachedData cache;
  std::lock_guard<std::mutex> lock(mu);
  const std::string key = path + "#" + std::to_string(split_seed);
  if (cache.key != key) {
    const auto ens = ocean::load_ensemble(path);
    auto split = ocean::split_simulations(ens.sims, ocean::kDefaultRatios, split_seed);
    cache.data = std::make_shared<const ocean::PairedDataset>(ens, std::move(split));
    cache.key = key;
  }
  return cache.data;
}

}  // namespace

Evaluator make_evaluator(const hpo::SearchSpace& space, const nlohmann::json& params) {
  const std::string kind = params.value("evaluator", std::string("train"));
  std::set<std::int64_t> crash;
  if (params.contains("crash_trials")) {
    for (const auto& v : params.at("crash_trials")) crash.insert(v.get<std::int64_t>());
  }
  auto maybe_crash = [crash](const Job& job) {
    if (crash.count(job.trial_id)) ::raise(SIGKILL);
  };

  if (kind == "synthetic") {
    const double delay = params.value("delay", 0.0);
    const bool jitter = params.value("jitter", false);
    return [space, delay, jitter, maybe_crash](const Job& job) {
      maybe_crash(job);
      double d = delay;
      if (jitter) {
        Rng rng(job.seed);
        d *= std::uniform_real_distribution<double>(0.5, 1.5)(rng);
      }
      if (d > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(d));
      hpo::TrialRecord r;
      r.objectives = hpo::synthetic_objectives(space, job.config);
      r.epochs_run = 1;
      return r;
    };
  }
  if (kind == "diverge") {
    return [maybe_crash](const Job& job) {
      maybe_crash(job);
      hpo::TrialRecord r;
      r.failure = "divergence";
      return r;
    };
  }
  if (kind == "train") {
    const std::string data = params.at("data").get<std::string>();
    const auto split_seed = params.value("split_seed", std::uint64_t{0});
    eval::TrainOptions base;
    base.max_epochs = params.value("max_epochs", 30);
    if (params.contains("stoppers")) base.stoppers = eval::stopper_config_from_json(params.at("stoppers"));
    base.pad_width = params.value("pad_width", base.pad_width);
    return [data, split_seed, base, maybe_crash](const Job& job) {
      maybe_crash(job);
      const auto ds = load_dataset_cached(data, split_seed);
      eval::TrainOptions opt = base;
      opt.seed = job.seed;
      const auto res = eval::train(job.config, *ds, opt);
      hpo::TrialRecord r;
      r.objectives = res.objectives;
      r.failure = res.failure;
      r.stopper = res.stopper;
      r.epochs_run = res.epochs_run;
      r.wall_seconds = res.wall_seconds;
      return r;
    };
  }
  throw ConfigError("unknown evaluator '" + kind + "'");
}

}  // namespace oceanbo::exec
