#include "oceanbo/ocean/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oceanbo/common/error.hpp"
#include "oceanbo/common/seed.hpp"

namespace oceanbo::ocean {

std::vector<Pair> make_pairs(const std::vector<int>& sims, int steps) {
  if (steps < 2) throw ConfigError("pairing needs at least 2 frames per simulation, got " + std::to_string(steps));
  std::vector<Pair> out;
  out.reserve(sims.size() * static_cast<std::size_t>(steps - 1));
  for (int s : sims) {
    for (int t = 0; t + 1 < steps; ++t) out.push_back({s, t});
  }
  return out;
}

Split split_simulations(int n_sims, const std::array<double, 3>& ratios, std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw ConfigError("split ratios must be positive");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  std::vector<int> order(static_cast<std::size_t>(n_sims));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  // A hair of slack so 0.2 * 10 lands on 2 rather than 1.9999.
  const auto n_val = static_cast<int>(std::floor(ratios[1] * n_sims + 1e-9));
  const auto n_test = static_cast<int>(std::floor(ratios[2] * n_sims + 1e-9));
  const int n_train = n_sims - n_val - n_test;
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    throw ConfigError("split of " + std::to_string(n_sims) + " simulations leaves an empty partition (" +
                      std::to_string(n_train) + "/" + std::to_string(n_val) + "/" + std::to_string(n_test) + ")");
  }
  Split s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

double Normalization::apply(int c, double x) const {
  if (c == kStateChannels) return (x - kappa_lo) / (kappa_hi - kappa_lo);
  const auto i = static_cast<std::size_t>(c);
  return passthrough[i] ? x : (x - mean[i]) / std[i];
}

double Normalization::invert(int c, double z) const {
  if (c == kStateChannels) return kappa_lo + z * (kappa_hi - kappa_lo);
  const auto i = static_cast<std::size_t>(c);
  return passthrough[i] ? z : z * std[i] + mean[i];
}

Normalization normalize_fit(const Ensemble& ens, const std::vector<int>& train_sims) {
  if (train_sims.empty()) throw ConfigError("normalize_fit: no training simulations");
  Normalization n;
  n.kappa_lo = ens.gen.kappa_lo;
  n.kappa_hi = ens.gen.kappa_hi;
  if (!(n.kappa_lo < n.kappa_hi)) throw FormatError("ensemble kappa range is empty");
  for (int c = 0; c < kStateChannels; ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (int s : train_sims) {
      for (int t = 0; t < ens.steps; ++t) {
        for (int h = 0; h < ens.height; ++h) {
          for (int w = 0; w < ens.width; ++w) {
            if (!ens.mask[static_cast<std::size_t>(h * ens.width + w)]) continue;
            sum += ens.at(s, t, h, w, c);
            ++count;
          }
        }
      }
    }
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (int s : train_sims) {
      for (int t = 0; t < ens.steps; ++t) {
        for (int h = 0; h < ens.height; ++h) {
          for (int w = 0; w < ens.width; ++w) {
            if (!ens.mask[static_cast<std::size_t>(h * ens.width + w)]) continue;
            const double d = ens.at(s, t, h, w, c) - mean;
            ss += d * d;
          }
        }
      }
    }
    const double sd = std::sqrt(ss / static_cast<double>(count));
    const auto i = static_cast<std::size_t>(c);
    n.mean[i] = mean;
    n.std[i] = sd;
    if (!(sd > 0.0)) {
      n.passthrough[i] = true;
      n.warning = true;
    }
  }
  return n;
}

nlohmann::json to_json(const Normalization& n) {
  return {{"mean", n.mean},         {"std", n.std},           {"passthrough", n.passthrough},
          {"kappa_lo", n.kappa_lo}, {"kappa_hi", n.kappa_hi}, {"warning", n.warning}};
}

Normalization normalization_from_json(const nlohmann::json& j) {
  Normalization n;
  n.mean = j.at("mean").get<std::array<double, kStateChannels>>();
  n.std = j.at("std").get<std::array<double, kStateChannels>>();
  n.passthrough = j.at("passthrough").get<std::array<bool, kStateChannels>>();
  n.kappa_lo = j.at("kappa_lo").get<double>();
  n.kappa_hi = j.at("kappa_hi").get<double>();
  n.warning = j.value("warning", false);
  return n;
}

PairedDataset::PairedDataset(const Ensemble& ens, Split split)
    : sims_(ens.sims), steps_(ens.steps), height_(ens.height), width_(ens.width), split_(std::move(split)) {
  if (steps_ < 2) throw ConfigError("dataset needs at least 2 frames per simulation");
  for (const auto* part : {&split_.train, &split_.val, &split_.test}) {
    for (int s : *part) {
      if (s < 0 || s >= sims_) throw ConfigError("split references simulation " + std::to_string(s));
    }
  }
  norm_ = normalize_fit(ens, split_.train);
  mask_ = ens.mask;
  mask_count_ = static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
  kappas_ = ens.kappas;
  train_pairs_ = make_pairs(split_.train, steps_);
  val_pairs_ = make_pairs(split_.val, steps_);
  test_pairs_ = make_pairs(split_.test, steps_);

  const auto plane = static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  frames_.assign(static_cast<std::size_t>(sims_) * static_cast<std::size_t>(steps_) * kChannels * plane, 0.0);
  for (int s = 0; s < sims_; ++s) {
    for (int t = 0; t < steps_; ++t) {
      double* f = frames_.data() + (static_cast<std::size_t>(s) * steps_ + t) * kChannels * plane;
      for (int h = 0; h < height_; ++h) {
        for (int w = 0; w < width_; ++w) {
          const auto p = static_cast<std::size_t>(h * width_ + w);
          if (!mask_[p]) continue;
          for (int c = 0; c < kChannels; ++c) {
            f[static_cast<std::size_t>(c) * plane + p] = norm_.apply(c, ens.at(s, t, h, w, c));
          }
        }
      }
    }
  }

  climatology_.assign(kStateChannels * plane, 0.0);
  for (const auto& pr : train_pairs_) {
    const auto next = frame(pr.sim, pr.t + 1);
    for (std::size_t i = 0; i < climatology_.size(); ++i) climatology_[i] += next[i];
  }
  for (double& v : climatology_) v /= static_cast<double>(train_pairs_.size());
}

std::span<const double> PairedDataset::frame(int sim, int t) const {
  const auto plane = static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  const std::size_t off = (static_cast<std::size_t>(sim) * steps_ + t) * kChannels * plane;
  return {frames_.data() + off, kChannels * plane};
}

fno::Tensor4 PairedDataset::inputs(std::span<const Pair> pairs) const {
  fno::Tensor4 out(fno::Shape4{static_cast<int>(pairs.size()), kChannels, height_, width_});
  const std::size_t n = out.shape().plane() * kChannels;
  for (std::size_t b = 0; b < pairs.size(); ++b) {
    const auto f = frame(pairs[b].sim, pairs[b].t);
    std::copy(f.begin(), f.end(), out.data() + b * n);
  }
  return out;
}

fno::Tensor4 PairedDataset::targets(std::span<const Pair> pairs) const {
  fno::Tensor4 out(fno::Shape4{static_cast<int>(pairs.size()), kStateChannels, height_, width_});
  const std::size_t n = out.shape().plane() * kStateChannels;
  for (std::size_t b = 0; b < pairs.size(); ++b) {
    const auto f = frame(pairs[b].sim, pairs[b].t + 1);
    std::copy(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(n), out.data() + b * n);
  }
  return out;
}

fno::Tensor4 PairedDataset::climatology_batch(int n) const {
  fno::Tensor4 out(fno::Shape4{n, kStateChannels, height_, width_});
  for (int b = 0; b < n; ++b) {
    std::copy(climatology_.begin(), climatology_.end(), out.data() + out.offset(b, 0));
  }
  return out;
}

}  // namespace oceanbo::ocean
