#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "oceanbo/fno/tensor.hpp"

namespace oceanbo::eval {

// log10 values are kept inside [-15, 15].
inline constexpr double kLogFloor = -15.0;
inline constexpr double kLogCeil = 15.0;

struct VariableMetrics {
  double mse = 0.0;
  double rse = 0.0;
  double log_rse = 0.0;
  double acc = 0.0;
  double log_one_minus_acc = 0.0;
  // The truth has no spread about the climatology (RSE undefined).
  bool degenerate = false;
  // Prediction or truth anomalies vanish; ACC is reported as 0.
  bool acc_degenerate = false;
};

// Sums over all samples and in-basin pixels, one entry per channel.
// RSE = sum (t - p)^2 / sum (t - clim)^2; ACC is the anomaly correlation.
std::vector<VariableMetrics> metrics(const fno::Tensor4& pred, const fno::Tensor4& target,
                                     std::span<const double> climatology, std::span<const std::uint8_t> mask);

// Metrics of always predicting the climatology.
std::vector<VariableMetrics> constant_predictor_metrics(const fno::Tensor4& target,
                                                        std::span<const double> climatology,
                                                        std::span<const std::uint8_t> mask);

// Pooled MSE over every channel and in-basin pixel.
double pooled_mse(const fno::Tensor4& pred, const fno::Tensor4& target, std::span<const std::uint8_t> mask);

// Average rank / (n - 1); a single value maps to 0.
std::vector<double> quantile_transform(std::span<const double> values);

nlohmann::json to_json(const VariableMetrics& m);

}  // namespace oceanbo::eval
