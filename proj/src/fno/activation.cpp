#include "oceanbo/fno/activation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oceanbo/common/error.hpp"

namespace oceanbo::fno {

namespace {

constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
constexpr double kSeluScale = 1.0507009873554804934193349852946;
constexpr double kLeakySlope = 0.01;
constexpr double kShrink = 0.5;

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct NameEntry {
  const char* name;
  Activation act;
};

constexpr NameEntry kNames[] = {
    {"relu", Activation::kRelu},         {"leaky_relu", Activation::kLeakyRelu},
    {"prelu", Activation::kPrelu},       {"relu6", Activation::kRelu6},
    {"elu", Activation::kElu},           {"selu", Activation::kSelu},
    {"silu", Activation::kSilu},         {"gelu", Activation::kGelu},
    {"sigmoid", Activation::kSigmoid},   {"logsigmoid", Activation::kLogSigmoid},
    {"softplus", Activation::kSoftplus}, {"softshrink", Activation::kSoftshrink},
    {"softsign", Activation::kSoftsign}, {"tanh", Activation::kTanh},
    {"tanhshrink", Activation::kTanhshrink}, {"threshold", Activation::kThreshold},
    {"hardtanh", Activation::kHardtanh}, {"identity", Activation::kIdentity},
    {"squareplus", Activation::kSquareplus},
};

}  // namespace

Activation activation_from_name(const std::string& name) {
  for (const auto& e : kNames) {
    if (name == e.name) return e.act;
  }
  throw ConfigError("unknown activation '" + name + "'");
}

std::string activation_name(Activation a) {
  for (const auto& e : kNames) {
    if (a == e.act) return e.name;
  }
  return "?";
}

const std::vector<Activation>& all_activations() {
  static const std::vector<Activation> acts = [] {
    std::vector<Activation> v;
    for (const auto& e : kNames) v.push_back(e.act);
    return v;
  }();
  return acts;
}

double activate(Activation a, double x, double slope) {
  switch (a) {
    case Activation::kRelu:
    case Activation::kThreshold:
      return x > 0 ? x : 0.0;
    case Activation::kLeakyRelu:
      return x >= 0 ? x : kLeakySlope * x;
    case Activation::kPrelu:
      return x >= 0 ? x : slope * x;
    case Activation::kRelu6:
      return std::clamp(x, 0.0, 6.0);
    case Activation::kElu:
      return x > 0 ? x : std::expm1(x);
    case Activation::kSelu:
      return kSeluScale * (x > 0 ? x : kSeluAlpha * std::expm1(x));
    case Activation::kSilu:
      return x * sigmoid(x);
    case Activation::kGelu:
      return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
    case Activation::kSigmoid:
      return sigmoid(x);
    case Activation::kLogSigmoid:
      return -log1pexp(-x);
    case Activation::kSoftplus:
      return x > 20.0 ? x : log1pexp(x);
    case Activation::kSoftshrink:
      return x > kShrink ? x - kShrink : (x < -kShrink ? x + kShrink : 0.0);
    case Activation::kSoftsign:
      return x / (1.0 + std::abs(x));
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kTanhshrink:
      return x - std::tanh(x);
    case Activation::kHardtanh:
      return std::clamp(x, -1.0, 1.0);
    case Activation::kIdentity:
      return x;
    case Activation::kSquareplus:
      return 0.5 * (x + std::sqrt(x * x + 4.0));
  }
  return x;
}

double activation_derivative(Activation a, double x, double slope) {
  switch (a) {
    case Activation::kRelu:
    case Activation::kThreshold:
      return x > 0 ? 1.0 : 0.0;
    case Activation::kLeakyRelu:
      return x >= 0 ? 1.0 : kLeakySlope;
    case Activation::kPrelu:
      return x >= 0 ? 1.0 : slope;
    case Activation::kRelu6:
      return (x > 0 && x < 6.0) ? 1.0 : 0.0;
    case Activation::kElu:
      return x > 0 ? 1.0 : std::exp(x);
    case Activation::kSelu:
      return kSeluScale * (x > 0 ? 1.0 : kSeluAlpha * std::exp(x));
    case Activation::kSilu: {
      const double s = sigmoid(x);
      return s * (1.0 + x * (1.0 - s));
    }
    case Activation::kGelu: {
      const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
      const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
      return cdf + x * pdf;
    }
    case Activation::kSigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
    case Activation::kLogSigmoid:
      return sigmoid(-x);
    case Activation::kSoftplus:
      return x > 20.0 ? 1.0 : sigmoid(x);
    case Activation::kSoftshrink:
      return (x > kShrink || x < -kShrink) ? 1.0 : 0.0;
    case Activation::kSoftsign: {
      const double d = 1.0 + std::abs(x);
      return 1.0 / (d * d);
    }
    case Activation::kTanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::kTanhshrink: {
      const double t = std::tanh(x);
      return t * t;
    }
    case Activation::kHardtanh:
      return (x > -1.0 && x < 1.0) ? 1.0 : 0.0;
    case Activation::kIdentity:
      return 1.0;
    case Activation::kSquareplus:
      return 0.5 * (1.0 + x / std::sqrt(x * x + 4.0));
  }
  return 1.0;
}

std::vector<double> activation_kinks(Activation a) {
  switch (a) {
    case Activation::kRelu:
    case Activation::kThreshold:
    case Activation::kLeakyRelu:
    case Activation::kPrelu:
    case Activation::kSelu:
      return {0.0};
    case Activation::kRelu6:
      return {0.0, 6.0};
    case Activation::kSoftshrink:
      return {-kShrink, kShrink};
    case Activation::kHardtanh:
      return {-1.0, 1.0};
    case Activation::kSoftplus:
      return {20.0};
    default:
      return {};
  }
}

void activation_forward(Activation a, std::span<const double> x, std::span<double> y, double slope) {
  if (a == Activation::kIdentity) {
    std::copy(x.begin(), x.end(), y.begin());
    return;
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = activate(a, x[i], slope);
}

double activation_backward(Activation a, std::span<const double> x, std::span<const double> upstream,
                           std::span<double> grad_in, double slope) {
  double dslope = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    grad_in[i] = activation_derivative(a, x[i], slope) * upstream[i];
    if (a == Activation::kPrelu && x[i] < 0) dslope += x[i] * upstream[i];
  }
  return dslope;
}

}  // namespace oceanbo::fno
