#include "oceanbo/eval/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "oceanbo/common/error.hpp"
#include "oceanbo/common/seed.hpp"
#include "oceanbo/fno/optim.hpp"

namespace oceanbo::eval {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fno::Tensor4 slice(const fno::Tensor4& t, int begin, int end) {
  const auto& s = t.shape();
  fno::Tensor4 out(fno::Shape4{end - begin, s.c, s.h, s.w});
  std::copy(t.data() + t.offset(begin, 0), t.data() + t.offset(begin, 0) + out.size(), out.data());
  return out;
}

void write_slice(fno::Tensor4& dst, int begin, const fno::Tensor4& src) {
  std::copy(src.values().begin(), src.values().end(), dst.data() + dst.offset(begin, 0));
}

bool params_finite(const fno::ParamSet& ps) {
  for (const auto& p : ps.params()) {
    for (double v : p.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

struct EpochTimeout {};

}  // namespace

void validate(const StopperConfig& s) {
  if (s.grace_epochs < 1) throw ConfigError("constant-predictor grace must be >= 1 epoch");
  if (!(s.epoch_time_limit_s > 0.0)) throw ConfigError("epoch time limit must be positive");
}

nlohmann::json to_json(const StopperConfig& s) {
  return {{"constant_predictor", s.constant_predictor},
          {"grace_epochs", s.grace_epochs},
          {"epoch_time", s.epoch_time},
          {"epoch_time_limit_s", s.epoch_time_limit_s}};
}

StopperConfig stopper_config_from_json(const nlohmann::json& j) {
  StopperConfig s;
  s.constant_predictor = j.value("constant_predictor", s.constant_predictor);
  s.grace_epochs = j.value("grace_epochs", s.grace_epochs);
  s.epoch_time = j.value("epoch_time", s.epoch_time);
  s.epoch_time_limit_s = j.value("epoch_time_limit_s", s.epoch_time_limit_s);
  validate(s);
  return s;
}

nlohmann::json to_json(const EpochReport& r) {
  return {{"epoch", r.epoch},
          {"train_loss", r.train_loss},
          {"val_mse", r.val_mse},
          {"val_neg_acc", r.val_neg_acc},
          {"val_rse", r.val_rse},
          {"val_acc", r.val_acc},
          {"epoch_seconds", r.epoch_seconds}};
}

hpo::Configuration baseline_configuration() {
  hpo::Configuration c;
  c.set("padding", std::string("False"));
  c.set("padding_type", std::string("constant"));
  c.set("coord_feat", std::string("False"));
  c.set("lift_act", std::string("gelu"));
  c.set("num_FNO", std::int64_t{4});
  c.set("num_latent_feat", std::int64_t{32});
  c.set("num_modes", std::int64_t{16});
  c.set("num_proj_layers", std::int64_t{2});
  c.set("proj_size", std::int64_t{16});
  c.set("proj_act", std::string("silu"));
  c.set("alpha", 0.5);
  c.set("optimizer", std::string("Adam"));
  c.set("lr", 1e-3);
  c.set("weight_decay", 0.0);
  c.set("batch_size", std::int64_t{8});
  return c;
}

int chunk_size(const fno::FnoConfig& c, int height, int width, std::size_t budget_bytes) {
  const auto ph = static_cast<double>(height + 2 * c.pad());
  const auto pw = static_cast<double>(width + 2 * c.pad());
  const double plane = ph * pw;
  const double widest = std::max({c.num_latent_feat, c.proj_size, c.lifted_channels()});
  const double m = c.num_modes;
  // Cached pre-activations plus a handful of live temporaries in backward.
  const double values = plane * (c.lifted_channels() + c.num_latent_feat * (1.0 + c.num_fno) +
                                 c.proj_size * c.num_proj_layers + 6.0 * widest) +
                        2.0 * (2.0 * m - 1.0) * m * c.num_latent_feat * c.num_fno;
  const double per_sample = values * sizeof(double);
  return std::max(1, static_cast<int>(static_cast<double>(budget_bytes) / per_sample));
}

std::size_t training_parameter_bytes(const fno::FnoConfig& c) {
  const auto l = static_cast<std::size_t>(c.num_latent_feat);
  const auto m = static_cast<std::size_t>(c.num_modes);
  const auto p = static_cast<std::size_t>(c.proj_size);
  std::size_t values = l * (static_cast<std::size_t>(c.lifted_channels()) + 1);
  values += static_cast<std::size_t>(c.num_fno) * (2 * (2 * m - 1) * m * l * l + l * l + l);
  const std::size_t proj_in = c.num_proj_layers > 0 ? p : l;
  if (c.num_proj_layers > 0) values += l * p + p + static_cast<std::size_t>(c.num_proj_layers - 1) * (p * p + p);
  values += static_cast<std::size_t>(c.out_channels) * (proj_in + 1);
  return 4 * values * sizeof(double);
}

Evaluation evaluate(const fno::FnoConfig& config, const fno::ParamSet& params, const ocean::PairedDataset& data,
                    const std::vector<ocean::Pair>& pairs, std::size_t budget) {
  if (pairs.empty()) throw ConfigError("evaluate: no pairs");
  const int n = static_cast<int>(pairs.size());
  const int chunk = chunk_size(config, data.height(), data.width(), budget);
  fno::Tensor4 pred(fno::Shape4{n, ocean::kStateChannels, data.height(), data.width()});
  for (int b = 0; b < n; b += chunk) {
    const int e = std::min(n, b + chunk);
    const std::span<const ocean::Pair> part(pairs.data() + b, static_cast<std::size_t>(e - b));
    write_slice(pred, b, fno::forward(config, params, data.inputs(part)));
  }
  const fno::Tensor4 target = data.targets(pairs);
  Evaluation ev;
  const auto loss = composite_loss(pred, target, data.climatology(), data.mask(), 1.0);
  ev.mse = loss.mse;
  ev.acc = -loss.neg_acc;
  ev.per_variable = metrics(pred, target, data.climatology(), data.mask());
  return ev;
}

TrainResult train(const hpo::Configuration& config, const ocean::PairedDataset& data, const TrainOptions& opt) {
  const auto t_start = Clock::now();
  if (opt.max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  validate(opt.stoppers);

  TrainResult res;
  res.fno_config = fno::fno_config_from(config, data.height(), data.width(), opt.pad_width);
  const double alpha = opt.alpha ? *opt.alpha : config.get_double("alpha");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  const auto kind = fno::optimizer_from_name(config.get_string("optimizer"));
  const double lr = config.get_double("lr");
  const double wd = config.get_double("weight_decay");

  const auto& train_pairs = data.train_pairs();
  const auto& val_pairs = data.val_pairs();
  if (train_pairs.empty() || val_pairs.empty()) throw ConfigError("train: empty training or validation split");
  const int n_train = static_cast<int>(train_pairs.size());
  const int batch = static_cast<int>(std::clamp<std::int64_t>(config.get_int("batch_size"), 1, n_train));

  {
    const fno::Tensor4 val_target = data.targets(val_pairs);
    res.constant_val_mse = pooled_mse(data.climatology_batch(val_target.shape().n), val_target, data.mask());
  }

  if (training_parameter_bytes(res.fno_config) > opt.parameter_budget_bytes) {
    res.failure = "memory_limit";
    res.wall_seconds = seconds_since(t_start);
    return res;
  }

  fno::ParamSet params = fno::init_params(res.fno_config, derive_seed(opt.seed, 1));
  auto state = fno::make_optim_state(kind, lr, wd, params);
  const int chunk = chunk_size(res.fno_config, data.height(), data.width(), opt.activation_budget_bytes);

  double best_mse = std::numeric_limits<double>::infinity();
  auto record_epoch = [&](EpochReport rep, const Evaluation& ev) {
    rep.val_mse = ev.mse;
    rep.val_neg_acc = -ev.acc;
    for (std::size_t c = 0; c < 4 && c < ev.per_variable.size(); ++c) {
      rep.val_rse[c] = ev.per_variable[c].rse;
      rep.val_acc[c] = ev.per_variable[c].acc;
    }
    if (ev.mse < best_mse) {
      best_mse = ev.mse;
      res.best_epoch = rep.epoch;
      res.best_params = params;
      res.best_val_metrics = ev.per_variable;
      res.objectives = hpo::ObjectiveVector{-ev.mse, ev.acc};
    }
    res.reports.push_back(rep);
    if (opt.on_epoch) opt.on_epoch(rep);
  };

  if (opt.max_epochs == 0) {
    const auto t0 = Clock::now();
    const auto ev = evaluate(res.fno_config, params, data, val_pairs, opt.activation_budget_bytes);
    EpochReport rep;
    rep.epoch = 0;
    rep.epoch_seconds = seconds_since(t0);
    if (!std::isfinite(ev.mse) || !std::isfinite(ev.acc)) {
      res.failure = "divergence";
    } else {
      record_epoch(rep, ev);
    }
    res.wall_seconds = seconds_since(t_start);
    return res;
  }

  const Rng::result_type shuffle_root = derive_seed(opt.seed, 2);
  std::vector<int> order(static_cast<std::size_t>(n_train));
  std::vector<ocean::Pair> mb;

  for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    const auto t_epoch = Clock::now();
    auto check_deadline = [&]() {
      if (opt.stoppers.epoch_time && seconds_since(t_epoch) > opt.stoppers.epoch_time_limit_s) throw EpochTimeout{};
    };
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(shuffle_root, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    int batches = 0;
    try {
      for (int b = 0; b < n_train; b += batch) {
        const int e = std::min(n_train, b + batch);
        mb.clear();
        for (int i = b; i < e; ++i) mb.push_back(train_pairs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        const int nb = e - b;
        const fno::Tensor4 input = data.inputs(mb);
        const fno::Tensor4 target = data.targets(mb);
        fno::ParamSet grads = params.zeros_like();
        double loss = 0.0;

        if (nb <= chunk) {
          fno::ForwardCache cache;
          const fno::Tensor4 pred = fno::forward(res.fno_config, params, input, &cache);
          const auto lr_ = composite_loss(pred, target, data.climatology(), data.mask(), alpha, opt.loss);
          loss = lr_.loss;
          if (!std::isfinite(loss)) throw std::domain_error("non-finite loss");
          fno::backward_accumulate(cache, lr_.grad, grads);
        } else {
          // The correlation term couples the whole minibatch, so predictions
          // come first and gradients are pushed back chunk by chunk.
          fno::Tensor4 pred(target.shape());
          for (int c = 0; c < nb; c += chunk) {
            const int ce = std::min(nb, c + chunk);
            write_slice(pred, c, fno::forward(res.fno_config, params, slice(input, c, ce)));
            check_deadline();
          }
          const auto lr_ = composite_loss(pred, target, data.climatology(), data.mask(), alpha, opt.loss);
          loss = lr_.loss;
          if (!std::isfinite(loss)) throw std::domain_error("non-finite loss");
          for (int c = 0; c < nb; c += chunk) {
            const int ce = std::min(nb, c + chunk);
            fno::ForwardCache cache;
            fno::forward(res.fno_config, params, slice(input, c, ce), &cache);
            fno::backward_accumulate(cache, slice(lr_.grad, c, ce), grads);
            check_deadline();
          }
        }
        fno::optimizer_step(state, params, grads);
        if (!params_finite(params)) throw std::domain_error("non-finite parameters");
        loss_sum += loss;
        ++batches;
        check_deadline();
      }
    } catch (const EpochTimeout&) {
      res.failure = "epoch_time";
      res.stopper = hpo::Stopper::kEpochTime;
      res.epochs_run = epoch;
      break;
    } catch (const std::domain_error&) {
      res.failure = "divergence";
      res.epochs_run = epoch;
      break;
    } catch (const ConfigError& err) {
      // optimizer_step rejects non-finite gradients.
      if (std::string(err.what()).find("non-finite") == std::string::npos) throw;
      res.failure = "divergence";
      res.epochs_run = epoch;
      break;
    }

    const auto ev = evaluate(res.fno_config, params, data, val_pairs, opt.activation_budget_bytes);
    res.epochs_run = epoch;
    if (!std::isfinite(ev.mse) || !std::isfinite(ev.acc)) {
      res.failure = "divergence";
      break;
    }
    EpochReport rep;
    rep.epoch = epoch;
    rep.train_loss = loss_sum / std::max(1, batches);
    rep.epoch_seconds = seconds_since(t_epoch);
    record_epoch(rep, ev);

    if (opt.stoppers.epoch_time && rep.epoch_seconds > opt.stoppers.epoch_time_limit_s) {
      res.failure = "epoch_time";
      res.stopper = hpo::Stopper::kEpochTime;
      break;
    }
    if (opt.stoppers.constant_predictor && epoch == opt.stoppers.grace_epochs && best_mse > res.constant_val_mse) {
      res.failure = "constant_predictor";
      res.stopper = hpo::Stopper::kConstantPredictor;
      break;
    }
  }
  res.wall_seconds = seconds_since(t_start);
  return res;
}

}  // namespace oceanbo::eval
