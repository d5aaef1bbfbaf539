#include "oceanbo/hpo/space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "oceanbo/common/error.hpp"

namespace oceanbo::hpo {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double to_unit_float(const FloatDim& d, double v) {
  if (d.scale == Scale::kLog) {
    return (std::log10(v) - std::log10(d.lo)) / (std::log10(d.hi) - std::log10(d.lo));
  }
  return (v - d.lo) / (d.hi - d.lo);
}

double from_unit_float(const FloatDim& d, double u) {
  if (d.scale == Scale::kLog) {
    const double lg = std::log10(d.lo) + u * (std::log10(d.hi) - std::log10(d.lo));
    return std::clamp(std::pow(10.0, lg), d.lo, d.hi);
  }
  return std::clamp(d.lo + u * (d.hi - d.lo), d.lo, d.hi);
}

}  // namespace

const Value& Configuration::at(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw ConfigError("configuration has no value for '" + name + "'");
  return it->second;
}

const std::string& Configuration::get_string(const std::string& name) const {
  const auto* s = std::get_if<std::string>(&at(name));
  if (!s) throw ConfigError("'" + name + "' is not a symbol");
  return *s;
}

std::int64_t Configuration::get_int(const std::string& name) const {
  const Value& v = at(name);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) {
    if (std::floor(*d) == *d) return static_cast<std::int64_t>(*d);
  }
  throw ConfigError("'" + name + "' is not an integer");
}

double Configuration::get_double(const std::string& name) const {
  const Value& v = at(name);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw ConfigError("'" + name + "' is not a number");
}

bool Configuration::get_flag(const std::string& name) const {
  const std::string& s = get_string(name);
  if (s == "True") return true;
  if (s == "False") return false;
  throw ConfigError("'" + name + "' must be True or False, got '" + s + "'");
}

SearchSpace::SearchSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
  std::set<std::string> seen;
  for (const auto& d : dims_) {
    if (d.name.empty()) throw ConfigError("dimension with empty name");
    if (!seen.insert(d.name).second) throw ConfigError("duplicate dimension '" + d.name + "'");
    std::visit(Overloaded{
                   [&](const CategoricalDim& c) {
                     if (c.choices.empty())
                       throw ConfigError("categorical '" + d.name + "' has no choices");
                   },
                   [&](const IntegerDim& i) {
                     if (!(i.lo < i.hi)) throw ConfigError("integer '" + d.name + "' needs lo < hi");
                     if (i.first() > i.last())
                       throw ConfigError("integer '" + d.name + "' has an empty range");
                   },
                   [&](const FloatDim& f) {
                     if (!(f.lo < f.hi)) throw ConfigError("float '" + d.name + "' needs lo < hi");
                     if (f.scale == Scale::kLog && f.lo <= 0.0)
                       throw ConfigError("log-scale float '" + d.name + "' needs lo > 0");
                   }},
               d.kind);
  }
}

const Dimension& SearchSpace::lookup(const std::string& name) const {
  auto idx = index_of(name);
  if (!idx) throw ConfigError("unknown dimension '" + name + "'");
  return dims_[*idx];
}

std::optional<std::size_t> SearchSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i].name == name) return i;
  }
  return std::nullopt;
}

std::string SearchSpace::validation_errors(const Configuration& config) const {
  std::ostringstream err;
  for (const auto& d : dims_) {
    if (!config.contains(d.name)) {
      err << d.name << ": missing; ";
      continue;
    }
    const Value& v = config.at(d.name);
    std::visit(Overloaded{
                   [&](const CategoricalDim& c) {
                     const auto* s = std::get_if<std::string>(&v);
                     if (!s) {
                       err << d.name << ": expected a symbol; ";
                     } else if (std::find(c.choices.begin(), c.choices.end(), *s) == c.choices.end()) {
                       err << d.name << ": '" << *s << "' is not a valid choice; ";
                     }
                   },
                   [&](const IntegerDim& i) {
                     const auto* x = std::get_if<std::int64_t>(&v);
                     if (!x) {
                       err << d.name << ": expected an integer; ";
                     } else if (*x < i.first() || *x > i.last()) {
                       err << d.name << ": " << *x << " outside [" << i.first() << ", " << i.last()
                           << "]; ";
                     }
                   },
                   [&](const FloatDim& f) {
                     double x = 0.0;
                     if (const auto* dd = std::get_if<double>(&v)) {
                       x = *dd;
                     } else if (const auto* ii = std::get_if<std::int64_t>(&v)) {
                       x = static_cast<double>(*ii);
                     } else {
                       err << d.name << ": expected a number; ";
                       return;
                     }
                     if (!std::isfinite(x) || x < f.lo || x > f.hi) {
                       err << d.name << ": " << x << " outside (" << f.lo << ", " << f.hi << "); ";
                     }
                   }},
               d.kind);
  }
  for (const auto& [name, _] : config.values()) {
    if (!index_of(name)) err << name << ": not a dimension of the space; ";
  }
  return err.str();
}

std::string SearchSpace::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(*this).dump())));
  return buf;
}

bool SearchSpace::operator==(const SearchSpace& other) const {
  return to_json(*this) == to_json(other);
}

const std::vector<std::string>& activation_names() {
  static const std::vector<std::string> names = {
      "relu",     "leaky_relu", "prelu",      "relu6",   "elu",  "selu",       "silu",
      "gelu",     "sigmoid",    "logsigmoid", "softplus", "softshrink", "softsign", "tanh",
      "tanhshrink", "threshold", "hardtanh",  "identity", "squareplus"};
  return names;
}

const std::vector<std::string>& optimizer_names() {
  static const std::vector<std::string> names = {"Adadelta", "Adagrad", "Adam",
                                                 "AdamW",    "RMSprop", "SGD"};
  return names;
}

const std::vector<std::string>& padding_type_names() {
  static const std::vector<std::string> names = {"constant", "reflect", "replicate", "circular"};
  return names;
}

SearchSpace default_space() {
  const std::vector<std::string> flag = {"True", "False"};
  return SearchSpace({
      {"padding", CategoricalDim{flag}},
      {"padding_type", CategoricalDim{padding_type_names()}},
      {"coord_feat", CategoricalDim{flag}},
      {"lift_act", CategoricalDim{activation_names()}},
      {"num_FNO", IntegerDim{2, 16}},
      {"num_latent_feat", IntegerDim{2, 64}},
      {"num_modes", IntegerDim{2, 32}},
      {"num_proj_layers", IntegerDim{2, 16}},
      {"proj_size", IntegerDim{2, 16}},
      {"proj_act", CategoricalDim{activation_names()}},
      {"alpha", FloatDim{0.0, 1.0, Scale::kLinear}},
      {"optimizer", CategoricalDim{optimizer_names()}},
      {"lr", FloatDim{1e-6, 1e-2, Scale::kLog}},
      {"weight_decay", FloatDim{0.0, 0.1, Scale::kLinear}},
      {"batch_size", IntegerDim{2, 64}},
  });
}

Configuration sample_random(const SearchSpace& space, Rng& rng) {
  Configuration config;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& d : space.dimensions()) {
    std::visit(Overloaded{
                   [&](const CategoricalDim& c) {
                     std::uniform_int_distribution<std::size_t> pick(0, c.choices.size() - 1);
                     config.set(d.name, c.choices[pick(rng)]);
                   },
                   [&](const IntegerDim& i) {
                     std::uniform_int_distribution<std::int64_t> pick(i.first(), i.last());
                     config.set(d.name, pick(rng));
                   },
                   [&](const FloatDim& f) { config.set(d.name, from_unit_float(f, unit(rng))); }},
               d.kind);
  }
  return config;
}

std::vector<double> encode(const SearchSpace& space, const Configuration& config) {
  for (const auto& [name, _] : config.values()) {
    if (!space.index_of(name)) throw ConfigError("cannot encode unknown dimension '" + name + "'");
  }
  std::vector<double> out;
  out.reserve(space.size());
  for (const auto& d : space.dimensions()) {
    std::visit(Overloaded{
                   [&](const CategoricalDim& c) {
                     const std::string& s = config.get_string(d.name);
                     auto it = std::find(c.choices.begin(), c.choices.end(), s);
                     if (it == c.choices.end())
                       throw ConfigError("'" + s + "' is not a choice of '" + d.name + "'");
                     const auto n = c.choices.size();
                     out.push_back(n == 1 ? 0.0
                                          : static_cast<double>(it - c.choices.begin()) /
                                                static_cast<double>(n - 1));
                   },
                   [&](const IntegerDim& i) {
                     const auto span = i.last() - i.first();
                     const auto v = config.get_int(d.name);
                     out.push_back(span == 0 ? 0.0
                                             : static_cast<double>(v - i.first()) /
                                                   static_cast<double>(span));
                   },
                   [&](const FloatDim& f) { out.push_back(to_unit_float(f, config.get_double(d.name))); }},
               d.kind);
  }
  return out;
}

Configuration decode(const SearchSpace& space, const std::vector<double>& coords) {
  if (coords.size() != space.size()) {
    throw ConfigError("decode: expected " + std::to_string(space.size()) + " coordinates, got " +
                      std::to_string(coords.size()));
  }
  Configuration config;
  for (std::size_t k = 0; k < space.size(); ++k) {
    const auto& d = space.dimensions()[k];
    const double u = std::clamp(coords[k], 0.0, 1.0);
    std::visit(Overloaded{
                   [&](const CategoricalDim& c) {
                     const auto n = c.choices.size();
                     const auto idx = static_cast<std::size_t>(std::lround(u * static_cast<double>(n - 1)));
                     config.set(d.name, c.choices[std::min(idx, n - 1)]);
                   },
                   [&](const IntegerDim& i) {
                     const auto span = i.last() - i.first();
                     config.set(d.name, i.first() + static_cast<std::int64_t>(
                                                        std::llround(u * static_cast<double>(span))));
                   },
                   [&](const FloatDim& f) { config.set(d.name, from_unit_float(f, u)); }},
               d.kind);
  }
  return config;
}

nlohmann::json to_json(const SearchSpace& space) {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& d : space.dimensions()) {
    nlohmann::json j;
    j["name"] = d.name;
    std::visit(Overloaded{[&](const CategoricalDim& c) {
                            j["kind"] = "categorical";
                            j["choices"] = c.choices;
                          },
                          [&](const IntegerDim& i) {
                            j["kind"] = "integer";
                            j["lo"] = i.lo;
                            j["hi"] = i.hi;
                            j["inclusive"] = i.inclusive;
                          },
                          [&](const FloatDim& f) {
                            j["kind"] = "float";
                            j["lo"] = f.lo;
                            j["hi"] = f.hi;
                            j["scale"] = f.scale == Scale::kLog ? "log" : "linear";
                          }},
               d.kind);
    dims.push_back(std::move(j));
  }
  return nlohmann::json{{"dimensions", dims}};
}

SearchSpace space_from_json(const nlohmann::json& j) {
  const nlohmann::json& dims = j.is_array() ? j : j.at("dimensions");
  std::vector<Dimension> out;
  for (const auto& d : dims) {
    Dimension dim;
    dim.name = d.at("name").get<std::string>();
    const std::string kind = d.at("kind").get<std::string>();
    if (kind == "categorical") {
      CategoricalDim c;
      for (const auto& choice : d.at("choices")) {
        if (choice.is_boolean()) {
          c.choices.push_back(choice.get<bool>() ? "True" : "False");
        } else {
          c.choices.push_back(choice.is_string() ? choice.get<std::string>() : choice.dump());
        }
      }
      dim.kind = std::move(c);
    } else if (kind == "integer") {
      dim.kind = IntegerDim{d.at("lo").get<std::int64_t>(), d.at("hi").get<std::int64_t>(),
                            d.value("inclusive", true)};
    } else if (kind == "float") {
      const std::string scale = d.value("scale", "linear");
      if (scale != "linear" && scale != "log") throw ConfigError("unknown scale '" + scale + "'");
      dim.kind = FloatDim{d.at("lo").get<double>(), d.at("hi").get<double>(),
                          scale == "log" ? Scale::kLog : Scale::kLinear};
    } else {
      throw ConfigError("unknown dimension kind '" + kind + "'");
    }
    out.push_back(std::move(dim));
  }
  return SearchSpace(std::move(out));
}

nlohmann::json to_json(const Configuration& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, v] : config.values()) {
    std::visit([&](const auto& x) { j[name] = x; }, v);
  }
  return j;
}

Configuration config_from_json(const nlohmann::json& j) {
  Configuration config;
  for (const auto& [name, v] : j.items()) {
    if (v.is_string()) {
      config.set(name, v.get<std::string>());
    } else if (v.is_boolean()) {
      config.set(name, std::string(v.get<bool>() ? "True" : "False"));
    } else if (v.is_number_integer()) {
      config.set(name, v.get<std::int64_t>());
    } else if (v.is_number()) {
      config.set(name, v.get<double>());
    } else {
      throw ConfigError("unsupported value for '" + name + "'");
    }
  }
  return config;
}

Configuration config_from_json(const SearchSpace& space, const nlohmann::json& j) {
  Configuration raw = config_from_json(j);
  Configuration config;
  for (const auto& [name, v] : raw.values()) {
    auto idx = space.index_of(name);
    if (!idx) {
      config.set(name, v);
      continue;
    }
    const auto& d = space.dimensions()[*idx];
    if (d.is_float()) {
      if (const auto* i = std::get_if<std::int64_t>(&v)) {
        config.set(name, static_cast<double>(*i));
        continue;
      }
    } else if (d.is_integer()) {
      if (const auto* x = std::get_if<double>(&v); x && std::floor(*x) == *x) {
        config.set(name, static_cast<std::int64_t>(*x));
        continue;
      }
    }
    config.set(name, v);
  }
  return config;
}

std::string value_to_string(const Value& v) {
  return std::visit(Overloaded{[](const std::string& s) { return s; },
                               [](std::int64_t i) { return std::to_string(i); },
                               [](double d) {
                                 char buf[32];
                                 std::snprintf(buf, sizeof buf, "%.17g", d);
                                 return std::string(buf);
                               }},
                    v);
}

}  // namespace oceanbo::hpo
