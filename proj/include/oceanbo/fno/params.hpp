#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oceanbo/fno/tensor.hpp"

namespace oceanbo::fno {

// One trainable tensor. Complex tensors store interleaved (re, im) pairs,
// so `values` is always the real view optimizers operate on. The gradient
// of a real loss with respect to a complex entry is stored the same way,
// as dL/dRe + i dL/dIm.
struct Param {
  std::string name;
  std::vector<int> shape;
  bool is_complex = false;
  std::vector<double> values;

  std::size_t elements() const;  // complex entries count once
  Complex* complex_data() { return reinterpret_cast<Complex*>(values.data()); }
  const Complex* complex_data() const { return reinterpret_cast<const Complex*>(values.data()); }
};

class ParamSet {
 public:
  Param& add(std::string name, std::vector<int> shape, bool is_complex = false);

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  std::size_t size() const { return params_.size(); }

  std::optional<std::size_t> index_of(const std::string& name) const;
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;

  // Total number of real values.
  std::size_t total_values() const;
  ParamSet zeros_like() const;
  // Same names, shapes and kinds.
  bool same_layout(const ParamSet& other) const;

  // Bumped by every in-place update so stale forward caches can be detected.
  std::uint64_t version() const { return version_; }
  void touch() { ++version_; }

 private:
  std::vector<Param> params_;
  std::uint64_t version_ = 0;
};

}  // namespace oceanbo::fno
