#include "oceanbo/fno/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace oceanbo::fno {

std::string Shape4::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
         std::to_string(w) + ")";
}

bool all_finite(const Tensor4& t) {
  return std::all_of(t.values().begin(), t.values().end(), [](double v) { return std::isfinite(v); });
}

}  // namespace oceanbo::fno
