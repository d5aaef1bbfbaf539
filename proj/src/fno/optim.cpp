#include "oceanbo/fno/optim.hpp"

#include <array>
#include <cmath>

#include "oceanbo/common/error.hpp"

namespace oceanbo::fno {

namespace {

constexpr std::array<const char*, 6> kNames{"Adadelta", "Adagrad", "Adam", "AdamW", "RMSprop", "SGD"};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kAdagradEps = 1e-10;
constexpr double kRmsAlpha = 0.99;
constexpr double kRmsEps = 1e-8;
constexpr double kAdadeltaRho = 0.9;
constexpr double kAdadeltaEps = 1e-6;

}  // namespace

OptimizerKind optimizer_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (name == kNames[i]) return static_cast<OptimizerKind>(i);
  }
  throw ConfigError("unknown optimizer '" + name + "'");
}

std::string optimizer_name(OptimizerKind kind) { return kNames[static_cast<std::size_t>(kind)]; }

OptimState make_optim_state(OptimizerKind kind, double lr, double weight_decay, const ParamSet& params) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and >= 0");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ConfigError("weight_decay must be >= 0");
  OptimState s;
  s.kind = kind;
  s.lr = lr;
  s.weight_decay = weight_decay;
  for (const auto& p : params.params()) {
    s.buf1.emplace_back(p.values.size(), 0.0);
    s.buf2.emplace_back(p.values.size(), 0.0);
  }
  return s;
}

void optimizer_step(OptimState& state, ParamSet& params, const ParamSet& grads) {
  if (!params.same_layout(grads)) throw ShapeError("optimizer_step: gradients do not match parameters");
  if (state.buf1.size() != params.size()) throw ShapeError("optimizer_step: state does not match parameters");
  for (const auto& g : grads.params()) {
    for (double v : g.values) {
      if (!std::isfinite(v)) throw ConfigError("non-finite gradient in parameter '" + g.name + "'");
    }
  }

  ++state.step;
  const double lr = state.lr;
  const double wd = state.weight_decay;
  const auto t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(kAdamBeta1, t);
  const double bc2 = 1.0 - std::pow(kAdamBeta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params.params()[i].values;
    const auto& gv = grads.params()[i].values;
    auto& m = state.buf1[i];
    auto& v = state.buf2[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      double g = gv[k];
      switch (state.kind) {
        case OptimizerKind::kSgd:
          p[k] -= lr * (g + wd * p[k]);
          break;
        case OptimizerKind::kAdam:
        case OptimizerKind::kAdamW: {
          if (state.kind == OptimizerKind::kAdamW) {
            p[k] -= lr * wd * p[k];
          } else {
            g += wd * p[k];
          }
          m[k] = kAdamBeta1 * m[k] + (1.0 - kAdamBeta1) * g;
          v[k] = kAdamBeta2 * v[k] + (1.0 - kAdamBeta2) * g * g;
          p[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + kAdamEps);
          break;
        }
        case OptimizerKind::kAdagrad:
          g += wd * p[k];
          m[k] += g * g;
          p[k] -= lr * g / (std::sqrt(m[k]) + kAdagradEps);
          break;
        case OptimizerKind::kRmsprop:
          g += wd * p[k];
          m[k] = kRmsAlpha * m[k] + (1.0 - kRmsAlpha) * g * g;
          p[k] -= lr * g / (std::sqrt(m[k]) + kRmsEps);
          break;
        case OptimizerKind::kAdadelta: {
          g += wd * p[k];
          // m: running E[g^2], v: running E[dx^2]
          m[k] = kAdadeltaRho * m[k] + (1.0 - kAdadeltaRho) * g * g;
          const double delta = std::sqrt(v[k] + kAdadeltaEps) / std::sqrt(m[k] + kAdadeltaEps) * g;
          v[k] = kAdadeltaRho * v[k] + (1.0 - kAdadeltaRho) * delta * delta;
          p[k] -= lr * delta;
          break;
        }
      }
    }
  }
  params.touch();
}

}  // namespace oceanbo::fno
