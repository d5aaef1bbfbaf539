#pragma once

#include <span>
#include <string>
#include <vector>

namespace oceanbo::fno {

enum class Activation {
  kRelu,
  kLeakyRelu,
  kPrelu,
  kRelu6,
  kElu,
  kSelu,
  kSilu,
  kGelu,
  kSigmoid,
  kLogSigmoid,
  kSoftplus,
  kSoftshrink,
  kSoftsign,
  kTanh,
  kTanhshrink,
  kThreshold,
  kHardtanh,
  kIdentity,
  kSquareplus,
};

Activation activation_from_name(const std::string& name);
std::string activation_name(Activation a);
const std::vector<Activation>& all_activations();

// Default slope of a fresh PReLU layer.
inline constexpr double kPreluInit = 0.25;

// Scalar definitions (PyTorch defaults: leaky slope 0.01, softshrink and
// softplus at lambda 0.5 / beta 1 threshold 20, hardtanh on [-1, 1],
// threshold(0, 0), squareplus with b = 4). `slope` is only read by PReLU.
double activate(Activation a, double x, double slope = kPreluInit);
double activation_derivative(Activation a, double x, double slope = kPreluInit);

// Points where the derivative is discontinuous.
std::vector<double> activation_kinks(Activation a);

void activation_forward(Activation a, std::span<const double> x, std::span<double> y, double slope = kPreluInit);

// grad_in = activation'(x) * upstream. Returns dL/dslope for PReLU, else 0.
double activation_backward(Activation a, std::span<const double> x, std::span<const double> upstream,
                           std::span<double> grad_in, double slope = kPreluInit);

}  // namespace oceanbo::fno
