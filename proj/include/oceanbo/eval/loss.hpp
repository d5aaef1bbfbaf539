#pragma once

#include <cstdint>
#include <span>

#include "oceanbo/fno/tensor.hpp"

namespace oceanbo::eval {

inline constexpr double kAccEpsilon = 1e-12;

// kPooled: sum(ab) / (sqrt(sum a^2 * sum b^2) + eps), the anomaly
// correlation. kAbsProduct: sum(ab) / (sum |ab| + eps).
enum class AccForm { kPooled, kAbsProduct };
// kTraining: anomalies relative to the per-pixel training climatology.
// kBatchMean: relative to the per-pixel mean of the batch targets.
enum class ClimatologyMode { kTraining, kBatchMean };

struct LossOptions {
  AccForm acc_form = AccForm::kPooled;
  ClimatologyMode climatology = ClimatologyMode::kTraining;
};

struct LossResult {
  double loss = 0.0;
  double mse = 0.0;
  double neg_acc = 0.0;
  fno::Tensor4 grad;  // dloss/dpred, zero outside the mask
};

// alpha * MSE + (1 - alpha) * (-ACC) over in-basin pixels of every sample
// and channel. `climatology` is (C, H, W); `mask` is (H, W).
LossResult composite_loss(const fno::Tensor4& pred, const fno::Tensor4& target, std::span<const double> climatology,
                          std::span<const std::uint8_t> mask, double alpha, const LossOptions& options = {});

}  // namespace oceanbo::eval
