#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oceanbo/fno/params.hpp"

namespace oceanbo::fno {

enum class OptimizerKind { kAdadelta, kAdagrad, kAdam, kAdamW, kRmsprop, kSgd };

OptimizerKind optimizer_from_name(const std::string& name);
std::string optimizer_name(OptimizerKind kind);

// Per-parameter buffers are laid out like ParamSet::params()[i].values.
struct OptimState {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 1e-3;
  double weight_decay = 0.0;
  std::int64_t step = 0;
  std::vector<std::vector<double>> buf1;
  std::vector<std::vector<double>> buf2;
};

OptimState make_optim_state(OptimizerKind kind, double lr, double weight_decay, const ParamSet& params);

// One update in place. SGD, Adam, Adagrad, RMSprop and Adadelta add the
// weight decay to the gradient; AdamW shrinks the parameters directly.
// Throws ConfigError naming the first parameter with a non-finite gradient.
void optimizer_step(OptimState& state, ParamSet& params, const ParamSet& grads);

}  // namespace oceanbo::fno
