#include "oceanbo/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "oceanbo/common/error.hpp"
#include "oceanbo/eval/loss.hpp"

namespace oceanbo::eval {

namespace {

double clamped_log10(double x) {
  if (!(x > 0.0)) return kLogFloor;
  return std::clamp(std::log10(x), kLogFloor, kLogCeil);
}

void check_shapes(const fno::Tensor4& pred, const fno::Tensor4& target, std::span<const double> climatology,
                  std::span<const std::uint8_t> mask) {
  const auto& s = pred.shape();
  if (!(s == target.shape())) throw ShapeError("metrics: prediction " + s.str() + " vs target " + target.shape().str());
  if (mask.size() != s.plane()) throw ShapeError("metrics: mask size does not match the grid");
  if (climatology.size() != s.plane() * static_cast<std::size_t>(s.c)) {
    throw ShapeError("metrics: climatology size does not match (C, H, W)");
  }
}

}  // namespace

std::vector<VariableMetrics> metrics(const fno::Tensor4& pred, const fno::Tensor4& target,
                                     std::span<const double> climatology, std::span<const std::uint8_t> mask) {
  check_shapes(pred, target, climatology, mask);
  const auto& s = pred.shape();
  const std::size_t plane = s.plane();
  std::vector<VariableMetrics> out(static_cast<std::size_t>(s.c));
  for (int c = 0; c < s.c; ++c) {
    double se = 0.0, sd = 0.0, sab = 0.0, saa = 0.0, sbb = 0.0;
    std::size_t count = 0;
    const double* k = climatology.data() + static_cast<std::size_t>(c) * plane;
    for (int n = 0; n < s.n; ++n) {
      const double* p = pred.data() + pred.offset(n, c);
      const double* t = target.data() + target.offset(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        if (!mask[i]) continue;
        const double a = p[i] - k[i];
        const double b = t[i] - k[i];
        se += (t[i] - p[i]) * (t[i] - p[i]);
        sd += b * b;
        sab += a * b;
        saa += a * a;
        sbb += b * b;
        ++count;
      }
    }
    auto& m = out[static_cast<std::size_t>(c)];
    m.mse = count ? se / static_cast<double>(count) : 0.0;
    if (sd > 0.0) {
      m.rse = se / sd;
    } else {
      m.degenerate = true;
      m.rse = se > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    m.log_rse = se > 0.0 && sd == 0.0 ? kLogCeil : clamped_log10(m.rse);
    m.acc_degenerate = saa == 0.0 || sbb == 0.0;
    m.acc = m.acc_degenerate ? 0.0 : sab / (std::sqrt(saa * sbb) + kAccEpsilon);
    m.log_one_minus_acc = clamped_log10(1.0 - std::min(m.acc, 1.0 - 1e-15));
  }
  return out;
}

std::vector<VariableMetrics> constant_predictor_metrics(const fno::Tensor4& target,
                                                        std::span<const double> climatology,
                                                        std::span<const std::uint8_t> mask) {
  if (target.shape().n < 1) throw ShapeError("constant_predictor_metrics: empty split");
  fno::Tensor4 pred(target.shape());
  const std::size_t per_sample = target.shape().plane() * static_cast<std::size_t>(target.shape().c);
  if (climatology.size() != per_sample) throw ShapeError("constant_predictor_metrics: climatology size mismatch");
  for (int n = 0; n < target.shape().n; ++n) {
    std::copy(climatology.begin(), climatology.end(), pred.data() + pred.offset(n, 0));
  }
  return metrics(pred, target, climatology, mask);
}

double pooled_mse(const fno::Tensor4& pred, const fno::Tensor4& target, std::span<const std::uint8_t> mask) {
  const auto& s = pred.shape();
  if (!(s == target.shape())) throw ShapeError("pooled_mse: shape mismatch");
  if (mask.size() != s.plane()) throw ShapeError("pooled_mse: mask size does not match the grid");
  double se = 0.0;
  std::size_t count = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* p = pred.data() + pred.offset(n, c);
      const double* t = target.data() + target.offset(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) {
        if (!mask[i]) continue;
        se += (p[i] - t[i]) * (p[i] - t[i]);
        ++count;
      }
    }
  }
  return count ? se / static_cast<double>(count) : 0.0;
}

std::vector<double> quantile_transform(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<double> out(n, 0.0);
  if (n <= 1) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = rank / static_cast<double>(n - 1);
    i = j + 1;
  }
  return out;
}

nlohmann::json to_json(const VariableMetrics& m) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"mse", m.mse},
          {"rse", finite_or_null(m.rse)},
          {"log_rse", m.log_rse},
          {"acc", m.acc},
          {"log_one_minus_acc", m.log_one_minus_acc},
          {"degenerate", m.degenerate},
          {"acc_degenerate", m.acc_degenerate}};
}

}  // namespace oceanbo::eval
