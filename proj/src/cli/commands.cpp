#include "oceanbo/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "oceanbo/cli/csv.hpp"
#include "oceanbo/common/error.hpp"
#include "oceanbo/common/seed.hpp"
#include "oceanbo/eval/metrics.hpp"
#include "oceanbo/eval/rollout.hpp"
#include "oceanbo/eval/train.hpp"
#include "oceanbo/exec/results_log.hpp"
#include "oceanbo/exec/search.hpp"
#include "oceanbo/exec/workers.hpp"
#include "oceanbo/fno/checkpoint.hpp"
#include "oceanbo/hpo/pareto.hpp"
#include "oceanbo/ocean/dataset.hpp"
#include "oceanbo/ocean/ensemble.hpp"

namespace oceanbo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::string default_out() {
  if (const char* env = std::getenv("OCEANBO_OUT"); env && *env) return env;
  return "oceanbo_out";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << contents;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Collects what a command read and wrote, then records it next to the outputs.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> args)
      : command_(std::move(command)), args_(std::move(args)), start_(Clock::now()) {}

  json config = json::object();
  json seeds = json::object();

  void input(const std::string& path) { inputs_.push_back(path); }
  void output(const std::string& path) { outputs_.push_back(path); }

  void write(const std::string& dir) const {
    json j;
    j["command"] = command_;
    j["args"] = args_;
    j["config"] = config;
    j["seeds"] = seeds;
    j["inputs"] = inputs_;
    json outs = json::array();
    for (const auto& p : outputs_) {
      const std::string bytes = read_file(p);
      outs.push_back({{"path", p}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
    }
    j["outputs"] = outs;
    j["wall_seconds"] = std::chrono::duration<double>(Clock::now() - start_).count();
    j["code_version"] = OCEANBO_VERSION;
    write_file_atomic((fs::path(dir) / ("manifest-" + command_ + ".json")).string(), j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  Clock::time_point start_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

std::string prepare_out(const std::string& out) {
  fs::create_directories(out);
  return out;
}

std::string out_file(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// A data argument may be a directory holding ensemble.{bin,json} or a path
// accepted by ensemble_paths.
std::string resolve_data(const std::string& data) {
  if (data.empty()) throw UsageError("--data is required");
  std::string stem = data;
  if (fs::is_directory(data)) stem = (fs::path(data) / "ensemble").string();
  const auto paths = ocean::ensemble_paths(stem);
  if (!fs::exists(paths.sidecar) || !fs::exists(paths.blob)) {
    throw UsageError("data not found: " + data + " (expected " + paths.blob + " and " + paths.sidecar + ")");
  }
  return paths.sidecar;
}

ocean::PairedDataset load_dataset(const std::string& sidecar, std::uint64_t split_seed) {
  const auto ens = ocean::load_ensemble(sidecar);
  return ocean::PairedDataset(ens, ocean::split_simulations(ens.sims, ocean::kDefaultRatios, split_seed));
}

std::string objective_string(double v) { return format_double(v); }

double clamped_log10(double x) {
  if (!(x > 0.0)) return eval::kLogFloor;
  return std::clamp(std::log10(x), eval::kLogFloor, eval::kLogCeil);
}

json per_variable_json(const std::vector<eval::VariableMetrics>& m) {
  json j = json::object();
  const auto& names = ocean::channel_names();
  for (std::size_t c = 0; c < m.size() && c < ocean::kStateChannels; ++c) j[names[c]] = eval::to_json(m[c]);
  return j;
}

json evaluation_json(const eval::Evaluation& ev) {
  return {{"mse", ev.mse}, {"acc", ev.acc}, {"per_variable", per_variable_json(ev.per_variable)}};
}

// ---------------------------------------------------------------- gen-data

struct GenFlags {
  int sims = 12;
  int days = 10;
  int grid = 32;
  std::uint64_t seed = 0;
  int substeps = 0;
  double amplitude = ocean::GenConfig{}.gyre_amplitude;
  double period = ocean::GenConfig{}.gyre_period;
  double kappa_lo = ocean::GenConfig{}.kappa_lo;
  double kappa_hi = ocean::GenConfig{}.kappa_hi;
  std::string out;
};

int cmd_gen_data(const GenFlags& f, const std::vector<std::string>& args) {
  if (f.days < 2) throw UsageError("--days must be at least 2: pairs need two consecutive frames");
  if (f.sims < 1) throw UsageError("--sims must be positive");
  if (f.grid < 4) throw UsageError("--grid must be at least 4");
  ocean::GenConfig gen;
  gen.n_sims = f.sims;
  gen.timesteps_out = f.days;
  gen.grid = f.grid;
  gen.seed = f.seed;
  gen.substeps_per_day = f.substeps;
  gen.gyre_amplitude = f.amplitude;
  gen.gyre_period = f.period;
  gen.kappa_lo = f.kappa_lo;
  gen.kappa_hi = f.kappa_hi;
  try {
    ocean::validate(gen);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }

  const std::string dir = prepare_out(f.out);
  Manifest man("gen-data", args);
  man.config = ocean::to_json(gen);
  man.seeds = {{"seed", f.seed}};

  const auto ens = ocean::generate_ensemble(gen);
  const std::string stem = out_file(dir, "ensemble");
  ocean::save_ensemble(stem, ens);
  const auto paths = ocean::ensemble_paths(stem);
  man.output(paths.blob);
  man.output(paths.sidecar);
  man.write(dir);

  const auto s = ens.shape();
  std::cout << "wrote " << paths.blob << " shape (" << s[0] << "," << s[1] << "," << s[2] << "," << s[3] << ","
            << s[4] << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------- baseline/train

struct TrainFlags {
  std::string data;
  std::string config;
  int epochs = 100;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  bool stoppers = false;
  int pad_width = 8;
  std::string out;
};

// Accepts a bare configuration object or any object with a "config" member
// (best.json from a search).
hpo::Configuration load_configuration(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("config not found: " + path);
  json j = read_json_file(path);
  if (j.is_object() && j.contains("trial_id") && j.at("trial_id").is_null()) {
    throw UsageError(path + " holds no configuration: the search produced no trial with objectives");
  }
  if (j.is_object() && j.contains("config") && j.at("config").is_object()) j = j.at("config");
  if (!j.is_object()) throw UsageError(path + ": expected a JSON object of hyperparameters");
  const auto space = hpo::default_space();
  std::string errors;
  hpo::Configuration config;
  try {
    config = hpo::config_from_json(space, j);
  } catch (const ConfigError& e) {
    errors += e.what();
  }
  errors += space.validation_errors(config);
  if (!errors.empty()) throw UsageError("invalid configuration " + path + ": " + errors);
  return config;
}

int cmd_train(const std::string& command, const TrainFlags& f, const std::vector<std::string>& args) {
  if (f.epochs < 0) throw UsageError("--epochs must be non-negative");
  if (f.alpha && !(*f.alpha >= 0.0 && *f.alpha <= 1.0)) throw UsageError("--alpha must lie in [0, 1]");
  const std::string sidecar = resolve_data(f.data);
  hpo::Configuration config;
  if (command == "train") {
    if (f.config.empty()) throw UsageError("train needs --config");
    config = load_configuration(f.config);
  } else {
    config = f.config.empty() ? eval::baseline_configuration() : load_configuration(f.config);
  }

  const std::string dir = prepare_out(f.out);
  Manifest man(command, args);
  man.input(sidecar);
  if (!f.config.empty()) man.input(f.config);
  man.seeds = {{"seed", f.seed}, {"split_seed", f.split_seed}};

  const auto data = load_dataset(sidecar, f.split_seed);

  eval::TrainOptions opt;
  opt.max_epochs = f.epochs;
  opt.seed = f.seed;
  opt.alpha = f.alpha;
  opt.pad_width = f.pad_width;
  opt.stoppers.constant_predictor = f.stoppers;
  opt.stoppers.epoch_time = f.stoppers;
  const double alpha = f.alpha ? *f.alpha : config.get_double("alpha");

  const std::string epochs_path = out_file(dir, "epochs.jsonl");
  std::string epochs_text;
  opt.on_epoch = [&](const eval::EpochReport& r) {
    json j = eval::to_json(r);
    j.erase("epoch_seconds");
    epochs_text += j.dump() + "\n";
    std::cerr << "epoch " << r.epoch << " val_mse " << r.val_mse << " val_acc " << -r.val_neg_acc << "\n";
  };

  const auto res = eval::train(config, data, opt);

  json m;
  m["command"] = command;
  m["configuration"] = hpo::to_json(config);
  m["fno_config"] = fno::to_json(res.fno_config);
  m["alpha"] = alpha;
  m["epochs"] = f.epochs;
  m["seed"] = f.seed;
  m["split_seed"] = f.split_seed;
  m["epochs_run"] = res.epochs_run;
  m["best_epoch"] = res.best_epoch;
  m["failure"] = res.failure ? json(*res.failure) : json(nullptr);
  m["constant_val_mse"] = res.constant_val_mse;
  if (res.objectives) m["objectives"] = {{"neg_mse", res.objectives->neg_mse}, {"acc", res.objectives->acc}};

  const auto& names = ocean::channel_names();
  std::vector<std::string> header{"model"};
  for (int c = 0; c < ocean::kStateChannels; ++c) {
    header.push_back(names[static_cast<std::size_t>(c)] + "_log_rse");
    header.push_back(names[static_cast<std::size_t>(c)] + "_log_one_minus_acc");
  }
  std::string table = csv_record(header);

  if (res.best_epoch >= 0) {
    const auto val = eval::evaluate(res.fno_config, res.best_params, data, data.val_pairs());
    m["validation"] = evaluation_json(val);
    const auto& split_pairs = data.test_pairs().empty() ? data.val_pairs() : data.test_pairs();
    m["table_split"] = data.test_pairs().empty() ? "val" : "test";
    const auto test = eval::evaluate(res.fno_config, res.best_params, data, split_pairs);
    m["test"] = evaluation_json(test);
    std::vector<std::string> row{command + " alpha=" + format_double(alpha)};
    for (const auto& v : test.per_variable) {
      row.push_back(format_double(v.log_rse));
      row.push_back(format_double(v.log_one_minus_acc));
    }
    table += csv_record(row);

    fno::Checkpoint ck;
    ck.kind = "fno";
    ck.config = res.fno_config;
    ck.params = res.best_params;
    ck.meta = {{"configuration", hpo::to_json(config)},
               {"alpha", alpha},
               {"seed", f.seed},
               {"split_seed", f.split_seed},
               {"best_epoch", res.best_epoch},
               {"grid", {data.height(), data.width()}},
               {"normalization", ocean::to_json(data.normalization())}};
    const std::string ck_path = out_file(dir, "checkpoint.bin");
    fno::save_checkpoint(ck_path, ck);
    man.output(ck_path);
  }

  const std::string metrics_path = out_file(dir, "metrics.json");
  write_file_atomic(metrics_path, m.dump(2) + "\n");
  write_file_atomic(epochs_path, epochs_text);
  const std::string table_path = out_file(dir, "table.csv");
  write_file_atomic(table_path, table);
  man.output(metrics_path);
  man.output(epochs_path);
  man.output(table_path);
  man.config = {{"configuration", hpo::to_json(config)}, {"alpha", alpha}, {"epochs", f.epochs},
                {"stoppers", f.stoppers}, {"pad_width", f.pad_width}};
  man.write(dir);

  if (res.failure) {
    std::cerr << "training failed: " << *res.failure << "\n";
    return kExitRuntime;
  }
  std::cout << "best epoch " << res.best_epoch << " val_mse " << -res.objectives->neg_mse << " val_acc "
            << res.objectives->acc << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ search

struct SearchFlags {
  std::string data;
  int workers = 4;
  int budget = 20;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  int max_epochs = 30;
  std::string evaluator = "train";
  double eval_delay = 0.0;
  bool jitter = false;
  double epoch_time_limit = eval::StopperConfig{}.epoch_time_limit_s;
  int grace_epochs = eval::StopperConfig{}.grace_epochs;
  bool no_stoppers = false;
  int n_initial = 0;
  int pad_width = 8;
  std::string space;
  bool threads = false;
  std::vector<std::int64_t> crash_trials;
  bool resume = false;
  std::string out;
};

struct Ranked {
  hpo::TrialRecord trial;
  double q_mse = 0.0;
  double q_neg_acc = 0.0;
};

// Quantiles of MSE and negative ACC over the successful trials (or, with
// `stopped`, over stopped trials that kept objectives); lower is better.
std::vector<Ranked> rank_trials(const std::vector<hpo::TrialRecord>& trials, bool stopped = false) {
  std::vector<Ranked> out;
  std::vector<double> mse, neg_acc;
  for (const auto& t : trials) {
    const bool use = stopped ? t.stopper != hpo::Stopper::kNone && t.objectives.has_value() : t.ok();
    if (!use) continue;
    out.push_back({t, 0.0, 0.0});
    mse.push_back(-t.objectives->neg_mse);
    neg_acc.push_back(-t.objectives->acc);
  }
  const auto qm = eval::quantile_transform(mse);
  const auto qa = eval::quantile_transform(neg_acc);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].q_mse = qm[i];
    out[i].q_neg_acc = qa[i];
  }
  return out;
}

void write_search_outputs(const std::string& dir, const hpo::SearchSpace& space,
                          const std::vector<hpo::TrialRecord>& trials, Manifest& man) {
  std::vector<std::string> header{"trial_id", "neg_mse", "acc"};
  for (const auto& d : space.dimensions()) header.push_back(d.name);
  std::string csv = csv_record(header);
  for (const auto& t : hpo::pareto_front(trials)) {
    std::vector<std::string> row{std::to_string(t.trial_id), objective_string(t.objectives->neg_mse),
                                 objective_string(t.objectives->acc)};
    for (const auto& d : space.dimensions()) {
      row.push_back(t.config.contains(d.name) ? hpo::value_to_string(t.config.at(d.name)) : "");
    }
    csv += csv_record(row);
  }
  const std::string pareto_path = out_file(dir, "pareto.csv");
  write_file_atomic(pareto_path, csv);
  man.output(pareto_path);

  json best = {{"trial_id", nullptr}};
  auto ranked = rank_trials(trials);
  const bool fallback = ranked.empty();
  if (fallback) ranked = rank_trials(trials, true);
  const Ranked* pick = nullptr;
  for (const auto& r : ranked) {
    const double s = r.q_mse + r.q_neg_acc;
    if (!pick || s < pick->q_mse + pick->q_neg_acc) pick = &r;
  }
  if (pick) {
    best = {{"trial_id", pick->trial.trial_id},
            {"config", hpo::to_json(pick->trial.config)},
            {"objectives", {{"neg_mse", pick->trial.objectives->neg_mse}, {"acc", pick->trial.objectives->acc}}},
            {"quantiles", {{"mse", pick->q_mse}, {"neg_acc", pick->q_neg_acc}}},
            {"score", 2.0 - pick->q_mse - pick->q_neg_acc},
            {"seed", pick->trial.seed},
            {"stopped", fallback}};
    if (fallback) {
      std::cerr << "warning: no successful trials, best.json holds the best stopped trial (" << pick->trial.trial_id
                << ", " << pick->trial.failure.value_or("?") << ")\n";
    }
  } else {
    std::cerr << "warning: no trials with objectives, best.json is empty\n";
  }
  const std::string best_path = out_file(dir, "best.json");
  write_file_atomic(best_path, best.dump(2) + "\n");
  man.output(best_path);
}

std::unique_ptr<exec::WorkerPool> make_pool(bool threads, int workers, exec::Evaluator ev) {
  if (threads) return std::make_unique<exec::ThreadPool>(workers, std::move(ev));
  return std::make_unique<exec::ProcessPool>(workers, std::move(ev));
}

void print_trial(const hpo::TrialRecord& t) {
  std::cerr << "trial " << t.trial_id;
  if (t.ok()) {
    std::cerr << " neg_mse " << t.objectives->neg_mse << " acc " << t.objectives->acc;
  } else {
    std::cerr << " failed: " << t.failure.value_or("?");
  }
  std::cerr << " epochs " << t.epochs_run << "\n";
}

int cmd_search(const SearchFlags& f, const std::vector<std::string>& args) {
  const std::string dir = prepare_out(f.out);
  const std::string log = out_file(dir, "results.jsonl");
  Manifest man("search", args);

  if (f.resume) {
    if (!fs::exists(log)) throw UsageError("nothing to resume: " + log + " does not exist");
    const auto contents = exec::read_log(log);
    const auto& h = contents.header;
    // Injected crashes belong to the interrupted run only.
    json jp = h.job_params;
    jp.erase("crash_trials");
    auto pool = make_pool(f.threads, h.workers, exec::make_evaluator(h.space, jp));
    const auto summary = exec::resume_search(log, *pool, std::nullopt, print_trial);
    man.config = exec::to_json(h);
    man.seeds = {{"seed", h.seed}};
    man.input(log);
    man.output(log);
    write_search_outputs(dir, h.space, summary.trials, man);
    man.write(dir);
    std::cout << "resumed " << log << ": replayed " << summary.replayed << ", re-issued " << summary.reissued
              << ", " << summary.trials.size() << " trials\n";
    return kExitOk;
  }

  if (f.workers < 1) throw UsageError("--workers must be positive");
  if (f.budget < f.workers) throw UsageError("--budget must be at least --workers");
  if (f.max_epochs < 0) throw UsageError("--max-epochs must be non-negative");

  exec::SearchRun run;
  run.space = f.space.empty() ? hpo::default_space() : hpo::space_from_json(read_json_file(f.space));
  run.workers = f.workers;
  run.budget = f.budget;
  run.seed = f.seed;
  run.settings.n_initial = f.n_initial > 0 ? f.n_initial : exec::default_initial_design(f.workers);
  run.log_path = log;

  json jp = {{"evaluator", f.evaluator}};
  if (f.evaluator == "train") {
    jp["data"] = fs::absolute(resolve_data(f.data)).string();
    jp["split_seed"] = f.split_seed;
    jp["max_epochs"] = f.max_epochs;
    jp["pad_width"] = f.pad_width;
    eval::StopperConfig st;
    st.constant_predictor = !f.no_stoppers;
    st.epoch_time = !f.no_stoppers;
    st.grace_epochs = f.grace_epochs;
    st.epoch_time_limit_s = f.epoch_time_limit;
    try {
      eval::validate(st);
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
    jp["stoppers"] = eval::to_json(st);
    man.input(jp["data"].get<std::string>());
  } else if (f.evaluator == "synthetic") {
    jp["delay"] = f.eval_delay;
    jp["jitter"] = f.jitter;
  } else if (f.evaluator != "diverge") {
    throw UsageError("unknown evaluator '" + f.evaluator + "'");
  }
  if (!f.crash_trials.empty()) jp["crash_trials"] = f.crash_trials;
  run.job_params = jp;

  if (fs::exists(log) && fs::file_size(log) > 0) {
    throw UsageError(log + " already exists; pass --resume to continue it or choose another --out");
  }

  auto pool = make_pool(f.threads, f.workers, exec::make_evaluator(run.space, run.job_params));
  const auto summary = exec::run_search(run, *pool, print_trial);

  man.config = {{"space_hash", run.space.hash()}, {"settings", hpo::to_json(run.settings)}, {"job", jp},
                {"workers", f.workers}, {"budget", f.budget}};
  man.seeds = {{"seed", f.seed}, {"split_seed", f.split_seed}};
  man.output(log);
  write_search_outputs(dir, run.space, summary.trials, man);
  man.write(dir);
  std::cout << "wrote " << log << " with " << summary.trials.size() << " trials\n";
  return kExitOk;
}

// ----------------------------------------------------------------- rollout

struct RolloutFlags {
  std::string data;
  std::string checkpoint;
  int steps = 29;
  std::optional<std::uint64_t> split_seed;
  std::string out;
  std::string name = "rollout.csv";
};

bool normalization_matches(const ocean::Normalization& a, const ocean::Normalization& b) {
  auto close = [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max({1.0, std::abs(x), std::abs(y)}); };
  for (int c = 0; c < ocean::kStateChannels; ++c) {
    const auto i = static_cast<std::size_t>(c);
    if (!close(a.mean[i], b.mean[i]) || !close(a.std[i], b.std[i])) return false;
  }
  return close(a.kappa_lo, b.kappa_lo) && close(a.kappa_hi, b.kappa_hi);
}

int cmd_rollout(const RolloutFlags& f, const std::vector<std::string>& args) {
  if (f.steps < 1) throw UsageError("--steps must be positive");
  const std::string sidecar = resolve_data(f.data);
  if (f.checkpoint.empty() || !fs::exists(f.checkpoint)) throw UsageError("checkpoint not found: " + f.checkpoint);
  if (f.name.find('/') != std::string::npos) throw UsageError("--name must be a plain file name");

  const auto ck = fno::load_checkpoint(f.checkpoint);
  std::uint64_t split_seed = 0;
  if (f.split_seed) {
    split_seed = *f.split_seed;
  } else if (ck.meta.contains("split_seed")) {
    split_seed = ck.meta.at("split_seed").get<std::uint64_t>();
  }
  const auto data = load_dataset(sidecar, split_seed);

  if (ck.meta.contains("grid")) {
    const auto g = ck.meta.at("grid").get<std::vector<int>>();
    if (g.size() != 2 || g[0] != data.height() || g[1] != data.width()) {
      throw std::runtime_error("checkpoint was trained on a " + ck.meta.at("grid").dump() + " grid, data is " +
                               std::to_string(data.height()) + "x" + std::to_string(data.width()));
    }
  }
  if (ck.meta.contains("normalization") &&
      !normalization_matches(ocean::normalization_from_json(ck.meta.at("normalization")), data.normalization())) {
    throw std::runtime_error("checkpoint normalization does not match the data (different ensemble or split seed)");
  }

  eval::Predictor predictor;
  if (ck.kind == "oracle") {
    predictor = eval::oracle_predictor(data);
  } else if (ck.kind == "fno") {
    predictor = eval::model_predictor(ck.config, ck.params);
  } else {
    throw std::runtime_error("unknown checkpoint kind '" + ck.kind + "'");
  }

  const auto& sims = data.split().test;
  if (sims.empty()) throw std::runtime_error("the test split is empty");
  const int usable = std::min(f.steps, data.steps() - 1);
  if (usable < f.steps) {
    std::cerr << "warning: data has " << data.steps() << " frames; reporting steps 1.." << usable << "\n";
  }

  std::vector<std::array<double, 2>> sums(static_cast<std::size_t>(usable * ocean::kStateChannels), {0.0, 0.0});
  for (int sim : sims) {
    const auto r = eval::rollout(predictor, data, sim, 0, usable);
    for (const auto& st : r.steps) {
      for (int c = 0; c < ocean::kStateChannels; ++c) {
        auto& s = sums[static_cast<std::size_t>((st.step - 1) * ocean::kStateChannels + c)];
        s[0] += st.metrics[static_cast<std::size_t>(c)].log_rse;
        s[1] += st.metrics[static_cast<std::size_t>(c)].log_one_minus_acc;
      }
    }
  }

  const auto& names = ocean::channel_names();
  const double n = static_cast<double>(sims.size());
  std::string csv = csv_record({"step", "variable", "mean_log_rse", "mean_log_one_minus_acc", "n_sims"});
  for (int k = 1; k <= usable; ++k) {
    for (int c = 0; c < ocean::kStateChannels; ++c) {
      const auto& s = sums[static_cast<std::size_t>((k - 1) * ocean::kStateChannels + c)];
      csv += csv_record({std::to_string(k), names[static_cast<std::size_t>(c)], format_double(s[0] / n),
                         format_double(s[1] / n), std::to_string(sims.size())});
    }
  }

  const std::string dir = prepare_out(f.out);
  Manifest man("rollout", args);
  man.input(sidecar);
  man.input(f.checkpoint);
  man.config = {{"steps", f.steps}, {"reported_steps", usable}, {"checkpoint_kind", ck.kind},
                {"test_sims", sims}};
  man.seeds = {{"split_seed", split_seed}};
  const std::string path = out_file(dir, f.name);
  write_file_atomic(path, csv);
  man.output(path);
  man.write(dir);
  std::cout << "wrote " << path << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ report

struct ReportFlags {
  std::string log;
  std::string out;
};

int cmd_report(const ReportFlags& f, const std::vector<std::string>& args) {
  if (f.log.empty() || !fs::exists(f.log)) throw UsageError("results log not found: " + f.log);
  const auto contents = exec::read_log(f.log);
  if (contents.trials.empty()) throw std::runtime_error(f.log + " holds no trials");
  const auto& space = contents.header.space;

  std::vector<std::string> header{"trial_id", "status"};
  for (const auto& d : space.dimensions()) header.push_back(d.name);
  for (const char* c : {"neg_mse", "acc", "log10_mse", "log10_one_minus_acc"}) header.push_back(c);
  std::string pc = csv_record(header);
  for (const auto& t : contents.trials) {
    std::vector<std::string> row{std::to_string(t.trial_id), t.ok() ? "ok" : t.failure.value_or("failed")};
    for (const auto& d : space.dimensions()) {
      row.push_back(t.config.contains(d.name) ? hpo::value_to_string(t.config.at(d.name)) : "");
    }
    if (t.objectives) {
      row.push_back(format_double(t.objectives->neg_mse));
      row.push_back(format_double(t.objectives->acc));
      row.push_back(format_double(clamped_log10(-t.objectives->neg_mse)));
      row.push_back(format_double(clamped_log10(1.0 - t.objectives->acc)));
    } else {
      row.insert(row.end(), 4, "");
    }
    pc += csv_record(row);
  }

  std::string sc = csv_record({"trial_id", "q_mse", "q_neg_acc", "sum"});
  for (const auto& r : rank_trials(contents.trials)) {
    sc += csv_record({std::to_string(r.trial.trial_id), format_double(r.q_mse), format_double(r.q_neg_acc),
                      format_double(r.q_mse + r.q_neg_acc)});
  }

  const std::string dir = prepare_out(f.out);
  Manifest man("report", args);
  man.input(f.log);
  man.config = {{"space_hash", contents.header.space_hash}, {"trials", contents.trials.size()}};
  man.seeds = {{"seed", contents.header.seed}};
  const std::string pc_path = out_file(dir, "parallel_coords.csv");
  const std::string sc_path = out_file(dir, "scatter.csv");
  write_file_atomic(pc_path, pc);
  write_file_atomic(sc_path, sc);
  man.output(pc_path);
  man.output(sc_path);
  man.write(dir);
  std::cout << "wrote " << pc_path << " and " << sc_path << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> copy = args;
  std::vector<char*> argv;
  for (auto& a : copy) argv.push_back(a.data());
  argv.push_back(nullptr);
  return run_cli(static_cast<int>(copy.size()), argv.data());
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Multi-objective hyperparameter search for FNO ocean emulators"};
  app.require_subcommand(1);
  const std::vector<std::string> args(argv + 1, argv + argc);
  const std::string out_default = default_out();

  GenFlags gen;
  gen.out = out_default;
  auto* g = app.add_subcommand("gen-data", "Generate a synthetic basin ensemble");
  g->add_option("--sims", gen.sims, "Simulations")->capture_default_str();
  g->add_option("--days", gen.days, "Daily frames per simulation")->capture_default_str();
  g->add_option("--grid", gen.grid, "Grid cells per side")->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  g->add_option("--substeps", gen.substeps, "Solver substeps per day (0 = automatic)")->capture_default_str();
  g->add_option("--amplitude", gen.amplitude, "Gyre streamfunction amplitude")->capture_default_str();
  g->add_option("--period", gen.period, "Gyre oscillation period in days")->capture_default_str();
  g->add_option("--kappa-lo", gen.kappa_lo, "Lower bound of kappa")->capture_default_str();
  g->add_option("--kappa-hi", gen.kappa_hi, "Upper bound of kappa")->capture_default_str();
  g->add_option("--out", gen.out, "Output directory (default $OCEANBO_OUT)")->capture_default_str();

  TrainFlags base_flags;
  base_flags.out = out_default;
  TrainFlags train_flags = base_flags;
  auto add_train = [](CLI::App* sub, TrainFlags& t) {
    sub->add_option("--data", t.data, "Ensemble directory or file");
    sub->add_option("--config", t.config, "Configuration JSON (a search's best.json also works)");
    sub->add_option("--epochs", t.epochs, "Training epochs")->capture_default_str();
    sub->add_option("--alpha", t.alpha, "Loss weight of MSE against negative ACC");
    sub->add_option("--seed", t.seed, "Training seed")->capture_default_str();
    sub->add_option("--split-seed", t.split_seed, "Seed of the simulation split")->capture_default_str();
    sub->add_flag("--stoppers", t.stoppers, "Enable the early stoppers");
    sub->add_option("--pad-width", t.pad_width, "Cells added per side when padding is on")->capture_default_str();
    sub->add_option("--out", t.out, "Output directory (default $OCEANBO_OUT)")->capture_default_str();
  };
  auto* b = app.add_subcommand("baseline", "Train the reference configuration");
  add_train(b, base_flags);
  auto* t = app.add_subcommand("train", "Train a configuration from a JSON file");
  add_train(t, train_flags);

  SearchFlags search;
  search.out = out_default;
  auto* s = app.add_subcommand("search", "Asynchronous multi-objective search");
  s->add_option("--data", search.data, "Ensemble directory or file");
  s->add_option("--workers", search.workers, "Worker processes")->capture_default_str();
  s->add_option("--budget", search.budget, "Trials to evaluate")->capture_default_str();
  s->add_option("--seed", search.seed, "Search seed")->capture_default_str();
  s->add_option("--split-seed", search.split_seed, "Seed of the simulation split")->capture_default_str();
  s->add_option("--max-epochs", search.max_epochs, "Epochs per trial")->capture_default_str();
  s->add_option("--evaluator", search.evaluator, "train, synthetic or diverge")->capture_default_str();
  s->add_option("--eval-delay", search.eval_delay, "Seconds per synthetic evaluation")->capture_default_str();
  s->add_flag("--jitter", search.jitter, "Randomize synthetic delays");
  s->add_option("--epoch-time-limit", search.epoch_time_limit, "Epoch time stopper limit in seconds")
      ->capture_default_str();
  s->add_option("--grace-epochs", search.grace_epochs, "Epoch of the constant-predictor check")
      ->capture_default_str();
  s->add_flag("--no-stoppers", search.no_stoppers, "Disable the early stoppers");
  s->add_option("--n-initial", search.n_initial, "Random configurations first (default max(2*workers, 10))");
  s->add_option("--pad-width", search.pad_width, "Cells added per side when padding is on")->capture_default_str();
  s->add_option("--space", search.space, "Search space JSON (default: the built-in space)");
  s->add_flag("--threads", search.threads, "Run workers as threads instead of processes");
  s->add_option("--crash-trials", search.crash_trials, "Trial ids whose worker is killed (testing)")->group("");
  s->add_flag("--resume", search.resume, "Continue the log in --out");
  s->add_option("--out", search.out, "Output directory (default $OCEANBO_OUT)")->capture_default_str();

  RolloutFlags roll;
  roll.out = out_default;
  auto* r = app.add_subcommand("rollout", "Autoregressive rollout from day 0 of every test simulation");
  r->add_option("--data", roll.data, "Ensemble directory or file");
  r->add_option("--checkpoint", roll.checkpoint, "Checkpoint file");
  r->add_option("--steps", roll.steps, "Rollout steps")->capture_default_str();
  r->add_option("--split-seed", roll.split_seed, "Override the checkpoint's split seed");
  r->add_option("--name", roll.name, "Output file name")->capture_default_str();
  r->add_option("--out", roll.out, "Output directory (default $OCEANBO_OUT)")->capture_default_str();

  ReportFlags rep;
  rep.out = out_default;
  auto* p = app.add_subcommand("report", "Plot tables from a results log");
  p->add_option("--log", rep.log, "results.jsonl")->required();
  p->add_option("--out", rep.out, "Output directory (default $OCEANBO_OUT)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_gen_data(gen, args);
    if (b->parsed()) return cmd_train("baseline", base_flags, args);
    if (t->parsed()) return cmd_train("train", train_flags, args);
    if (s->parsed()) return cmd_search(search, args);
    if (r->parsed()) return cmd_rollout(roll, args);
    if (p->parsed()) return cmd_report(rep, args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace oceanbo::cli
