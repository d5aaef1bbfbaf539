#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "oceanbo/common/seed.hpp"

namespace oceanbo::hpo {

enum class Scale { kLinear, kLog };

struct CategoricalDim {
  std::vector<std::string> choices;
};

// Integer range. With inclusive=false both ends are excluded.
struct IntegerDim {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  bool inclusive = true;

  std::int64_t first() const { return inclusive ? lo : lo + 1; }
  std::int64_t last() const { return inclusive ? hi : hi - 1; }
};

struct FloatDim {
  double lo = 0.0;
  double hi = 1.0;
  Scale scale = Scale::kLinear;
};

struct Dimension {
  std::string name;
  std::variant<CategoricalDim, IntegerDim, FloatDim> kind;

  bool is_categorical() const { return std::holds_alternative<CategoricalDim>(kind); }
  bool is_integer() const { return std::holds_alternative<IntegerDim>(kind); }
  bool is_float() const { return std::holds_alternative<FloatDim>(kind); }
};

using Value = std::variant<std::string, std::int64_t, double>;

// One point of a SearchSpace: a value per dimension name.
class Configuration {
 public:
  Configuration() = default;

  void set(const std::string& name, Value value) { values_[name] = std::move(value); }
  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  const Value& at(const std::string& name) const;

  const std::string& get_string(const std::string& name) const;
  std::int64_t get_int(const std::string& name) const;
  double get_double(const std::string& name) const;
  // Categorical "True"/"False" symbols.
  bool get_flag(const std::string& name) const;

  const std::map<std::string, Value>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  bool operator==(const Configuration& other) const { return values_ == other.values_; }

 private:
  std::map<std::string, Value> values_;
};

// Ordered list of dimensions. The order fixes the encoded feature layout.
class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<Dimension> dims);

  const std::vector<Dimension>& dimensions() const { return dims_; }
  std::size_t size() const { return dims_.size(); }
  const Dimension& lookup(const std::string& name) const;
  std::optional<std::size_t> index_of(const std::string& name) const;

  // Empty string when valid, otherwise a list of offending fields.
  std::string validation_errors(const Configuration& config) const;
  bool validates(const Configuration& config) const { return validation_errors(config).empty(); }

  // Stable hex digest of the canonical JSON form.
  std::string hash() const;

  bool operator==(const SearchSpace& other) const;

 private:
  std::vector<Dimension> dims_;
};

// The hyperparameter space of the FNO search (15 dimensions).
SearchSpace default_space();

// The 19 activation names accepted for lift_act / proj_act.
const std::vector<std::string>& activation_names();
// The 6 optimizer names.
const std::vector<std::string>& optimizer_names();
// The 4 padding modes.
const std::vector<std::string>& padding_type_names();

Configuration sample_random(const SearchSpace& space, Rng& rng);

// Maps every dimension to [0,1]: floats min-max (after log10 for log
// dims), integers over their range, categoricals to index/(n-1).
std::vector<double> encode(const SearchSpace& space, const Configuration& config);

// Inverse of encode. Coordinates are clipped to [0,1]; integer and
// categorical coordinates round to the nearest representable value.
Configuration decode(const SearchSpace& space, const std::vector<double>& coords);

nlohmann::json to_json(const SearchSpace& space);
SearchSpace space_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Configuration& config);
// Parses values and coerces them to the dimension types of `space`
// (JSON booleans are accepted for True/False categoricals).
Configuration config_from_json(const SearchSpace& space, const nlohmann::json& j);
// Schema-free parse: strings stay strings, integers become int64, reals double.
Configuration config_from_json(const nlohmann::json& j);

std::string value_to_string(const Value& v);

}  // namespace oceanbo::hpo
