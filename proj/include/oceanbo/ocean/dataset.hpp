#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "oceanbo/fno/tensor.hpp"
#include "oceanbo/ocean/ensemble.hpp"

namespace oceanbo::ocean {

// Consecutive frames (sim, t) -> (sim, t + 1).
struct Pair {
  int sim = 0;
  int t = 0;
  bool operator==(const Pair&) const = default;
};

// All pairs of the given simulations, t = 0..steps-2. Throws if steps < 2.
std::vector<Pair> make_pairs(const std::vector<int>& sims, int steps);

struct Split {
  std::vector<int> train, val, test;
};

// Shuffles simulation indices with `seed` and cuts contiguous blocks:
// floor(ratio * n) for val and test, the remainder to train.
Split split_simulations(int n_sims, const std::array<double, 3>& ratios, std::uint64_t seed);

// Per-channel z-score of the state channels over in-basin pixels of the
// training simulations; kappa is mapped from [lo, hi] to [0, 1]. Pixels
// outside the basin stay 0 in normalized space.
struct Normalization {
  std::array<double, kStateChannels> mean{};
  std::array<double, kStateChannels> std{};
  std::array<bool, kStateChannels> passthrough{};
  double kappa_lo = 0.0;
  double kappa_hi = 1.0;
  // Set when some channel had zero spread and was left unscaled.
  bool warning = false;

  double apply(int channel, double value) const;
  double invert(int channel, double value) const;
};

Normalization normalize_fit(const Ensemble& ens, const std::vector<int>& train_sims);
nlohmann::json to_json(const Normalization& n);
Normalization normalization_from_json(const nlohmann::json& j);

// Normalized frames in channel-first double precision plus the bookkeeping
// every consumer of the data needs.
class PairedDataset {
 public:
  PairedDataset(const Ensemble& ens, Split split);

  int sims() const { return sims_; }
  int steps() const { return steps_; }
  int height() const { return height_; }
  int width() const { return width_; }
  const Split& split() const { return split_; }
  const Normalization& normalization() const { return norm_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  std::size_t mask_count() const { return mask_count_; }
  double kappa(int sim) const { return kappas_[static_cast<std::size_t>(sim)]; }

  const std::vector<Pair>& train_pairs() const { return train_pairs_; }
  const std::vector<Pair>& val_pairs() const { return val_pairs_; }
  const std::vector<Pair>& test_pairs() const { return test_pairs_; }

  // (5, H, W) normalized frame: state channels then kappa.
  std::span<const double> frame(int sim, int t) const;
  // Per-pixel mean of the normalized training targets, (4, H, W).
  const std::vector<double>& climatology() const { return climatology_; }

  // Inputs (B, 5, H, W) and targets (B, 4, H, W) for a list of pairs.
  fno::Tensor4 inputs(std::span<const Pair> pairs) const;
  fno::Tensor4 targets(std::span<const Pair> pairs) const;
  // The (1, 4, H, W) climatology broadcast to a batch of `n`.
  fno::Tensor4 climatology_batch(int n) const;

 private:
  int sims_, steps_, height_, width_;
  Split split_;
  Normalization norm_;
  std::vector<std::uint8_t> mask_;
  std::size_t mask_count_ = 0;
  std::vector<double> kappas_;
  std::vector<Pair> train_pairs_, val_pairs_, test_pairs_;
  std::vector<double> frames_;
  std::vector<double> climatology_;
};

inline constexpr std::array<double, 3> kDefaultRatios{0.6, 0.2, 0.2};

}  // namespace oceanbo::ocean
