#include "oceanbo/eval/loss.hpp"

#include <cmath>
#include <vector>

#include "oceanbo/common/error.hpp"

namespace oceanbo::eval {

LossResult composite_loss(const fno::Tensor4& pred, const fno::Tensor4& target, std::span<const double> climatology,
                          std::span<const std::uint8_t> mask, double alpha, const LossOptions& options) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  const auto& s = pred.shape();
  if (!(s == target.shape())) {
    throw ShapeError("composite_loss: prediction " + s.str() + " vs target " + target.shape().str());
  }
  const std::size_t plane = s.plane();
  if (mask.size() != plane) throw ShapeError("composite_loss: mask size does not match the grid");
  const std::size_t per_sample = plane * static_cast<std::size_t>(s.c);
  if (options.climatology == ClimatologyMode::kTraining && climatology.size() != per_sample) {
    throw ShapeError("composite_loss: climatology size does not match (C, H, W)");
  }

  std::vector<double> clim;
  if (options.climatology == ClimatologyMode::kBatchMean) {
    clim.assign(per_sample, 0.0);
    for (int n = 0; n < s.n; ++n) {
      const double* t = target.data() + target.offset(n, 0);
      for (std::size_t i = 0; i < per_sample; ++i) clim[i] += t[i];
    }
    for (double& v : clim) v /= s.n;
    climatology = clim;
  }

  std::size_t count = 0;
  for (auto m : mask) count += m ? 1 : 0;
  const double total = static_cast<double>(count) * s.c * s.n;

  LossResult r;
  r.grad = fno::Tensor4(s);
  double se = 0.0, sab = 0.0, saa = 0.0, sbb = 0.0, sabs = 0.0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* p = pred.data() + pred.offset(n, c);
      const double* t = target.data() + target.offset(n, c);
      const double* k = climatology.data() + static_cast<std::size_t>(c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        if (!mask[i]) continue;
        const double d = p[i] - t[i];
        const double a = p[i] - k[i];
        const double b = t[i] - k[i];
        se += d * d;
        sab += a * b;
        saa += a * a;
        sbb += b * b;
        sabs += std::abs(a * b);
      }
    }
  }
  if (total == 0.0) throw ShapeError("composite_loss: no in-basin pixels");
  r.mse = se / total;

  double acc = 0.0;
  double den = 0.0;
  if (options.acc_form == AccForm::kPooled) {
    den = std::sqrt(saa * sbb) + kAccEpsilon;
  } else {
    den = sabs + kAccEpsilon;
  }
  acc = sab / den;
  r.neg_acc = -acc;
  r.loss = alpha * r.mse + (1.0 - alpha) * r.neg_acc;

  // d acc / d a_i, pooled form: b_i / D - sab * a_i sqrt(sbb / saa) / D^2.
  const double ratio = saa > 0.0 ? std::sqrt(sbb / saa) : 0.0;
  const double w_mse = alpha * 2.0 / total;
  const double w_acc = -(1.0 - alpha);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* p = pred.data() + pred.offset(n, c);
      const double* t = target.data() + target.offset(n, c);
      const double* k = climatology.data() + static_cast<std::size_t>(c) * plane;
      double* g = r.grad.data() + r.grad.offset(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        if (!mask[i]) continue;
        const double a = p[i] - k[i];
        const double b = t[i] - k[i];
        double dacc = 0.0;
        if (options.acc_form == AccForm::kPooled) {
          dacc = b / den - sab * a * ratio / (den * den);
        } else {
          const double sign = a * b > 0.0 ? 1.0 : (a * b < 0.0 ? -1.0 : 0.0);
          dacc = b / den - sab * sign * b / (den * den);
        }
        g[i] = w_mse * (p[i] - t[i]) + w_acc * dacc;
      }
    }
  }
  return r;
}

}  // namespace oceanbo::eval
