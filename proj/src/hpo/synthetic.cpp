#include "oceanbo/hpo/synthetic.hpp"

#include <cmath>
#include <numbers>

namespace oceanbo::hpo {

ObjectiveVector synthetic_objectives(const SearchSpace& space, const Configuration& config) {
  const auto z = encode(space, config);
  double sphere = 0.0;
  double ripple = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double a = 0.25 + 0.1 * static_cast<double>(i % 3);
    const double b = 0.75 - 0.1 * static_cast<double>(i % 3);
    sphere += (z[i] - a) * (z[i] - a);
    const double t = z[i] - b;
    ripple += t * t + 0.05 * (1.0 - std::cos(8.0 * std::numbers::pi * t));
  }
  return {-sphere, -ripple};
}

SearchSpace synthetic_space() {
  return SearchSpace({
      {"x_linear", FloatDim{-5.0, 5.0, Scale::kLinear}},
      {"x_log", FloatDim{1e-3, 10.0, Scale::kLog}},
      {"n_small", IntegerDim{0, 10}},
      {"n_large", IntegerDim{1, 100}},
      {"family", CategoricalDim{{"a", "b", "c", "d", "e"}}},
      {"switch", CategoricalDim{{"True", "False"}}},
  });
}

}  // namespace oceanbo::hpo
