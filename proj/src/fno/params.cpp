#include "oceanbo/fno/params.hpp"

#include <functional>
#include <numeric>

#include "oceanbo/common/error.hpp"

namespace oceanbo::fno {

std::size_t Param::elements() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

Param& ParamSet::add(std::string name, std::vector<int> shape, bool is_complex) {
  if (index_of(name)) throw ConfigError("duplicate parameter '" + name + "'");
  Param p;
  p.name = std::move(name);
  p.shape = std::move(shape);
  p.is_complex = is_complex;
  p.values.assign(p.elements() * (is_complex ? 2 : 1), 0.0);
  params_.push_back(std::move(p));
  return params_.back();
}

std::optional<std::size_t> ParamSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

Param& ParamSet::at(const std::string& name) {
  auto i = index_of(name);
  if (!i) throw ConfigError("no parameter named '" + name + "'");
  return params_[*i];
}

const Param& ParamSet::at(const std::string& name) const {
  auto i = index_of(name);
  if (!i) throw ConfigError("no parameter named '" + name + "'");
  return params_[*i];
}

std::size_t ParamSet::total_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.values.size();
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& p : params_) out.add(p.name, p.shape, p.is_complex);
  return out;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = params_[i];
    const auto& b = other.params_[i];
    if (a.name != b.name || a.shape != b.shape || a.is_complex != b.is_complex) return false;
  }
  return true;
}

}  // namespace oceanbo::fno
