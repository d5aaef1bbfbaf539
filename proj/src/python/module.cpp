#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "oceanbo/common/error.hpp"
#include "oceanbo/common/seed.hpp"
#include "oceanbo/eval/metrics.hpp"
#include "oceanbo/fno/spectral.hpp"
#include "oceanbo/forest/extra_trees.hpp"
#include "oceanbo/hpo/optimizer.hpp"
#include "oceanbo/hpo/pareto.hpp"
#include "oceanbo/hpo/space.hpp"
#include "oceanbo/hpo/synthetic.hpp"
#include "oceanbo/ocean/ensemble.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace oceanbo;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

hpo::SearchSpace space_arg(const std::string& space_json) {
  return space_json.empty() ? hpo::default_space() : hpo::space_from_json(json::parse(space_json));
}

// Successful trial records from (n, 2) objectives, for the Pareto helpers.
std::vector<hpo::Point2> points_arg(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw py::value_error("expected an (n, 2) array");
  std::vector<hpo::Point2> pts(static_cast<std::size_t>(a.shape(0)));
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) pts[static_cast<std::size_t>(i)] = {r(i, 0), r(i, 1)};
  return pts;
}

class PyForest {
 public:
  PyForest(const Array& x, const Array& y, int n_trees, int min_samples_split, double max_features,
           std::uint64_t seed) {
    if (x.ndim() != 2 || y.ndim() != 1 || x.shape(0) != y.shape(0)) throw py::value_error("x (n, d) and y (n,)");
    forest::RowMatrix m(x.shape(0), x.shape(1));
    std::copy(x.data(), x.data() + x.size(), m.data());
    forest::ForestConfig cfg{n_trees, min_samples_split, max_features, seed};
    model_ = forest::ExtraTreesRegressor::fit(m, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                                              cfg);
  }

  py::tuple predict(const Array& x) const {
    if (x.ndim() != 2) throw py::value_error("expected an (n, d) array");
    const auto n = x.shape(0);
    const auto d = static_cast<std::size_t>(x.shape(1));
    Array mean(n), sd(n);
    for (py::ssize_t i = 0; i < n; ++i) {
      const auto ms = model_.predict_mean_std(std::span<const double>(x.data() + i * x.shape(1), d));
      mean.mutable_at(i) = ms.mean;
      sd.mutable_at(i) = ms.std;
    }
    return py::make_tuple(mean, sd);
  }

  std::size_t n_trees() const { return model_.n_trees(); }

 private:
  forest::ExtraTreesRegressor model_;
};

class PyOptimizer {
 public:
  PyOptimizer(const std::string& space_json, std::uint64_t seed, int n_initial)
      : opt_(space_arg(space_json), [&] {
          hpo::OptimizerSettings s;
          s.seed = seed;
          s.n_initial = n_initial;
          return s;
        }()) {}

  std::vector<std::string> ask(int q) {
    std::vector<std::string> out;
    for (const auto& c : opt_.ask(q)) out.push_back(hpo::to_json(c).dump());
    return out;
  }

  void tell(const std::string& config_json, std::optional<std::pair<double, double>> objectives,
            std::optional<std::string> failure) {
    hpo::TrialRecord r;
    r.trial_id = static_cast<std::int64_t>(opt_.history().size());
    r.config = hpo::config_from_json(opt_.space(), json::parse(config_json));
    if (objectives) r.objectives = hpo::ObjectiveVector{objectives->first, objectives->second};
    r.failure = failure;
    opt_.tell(std::move(r));
  }

  std::pair<double, double> synthetic(const std::string& config_json) const {
    const auto o = hpo::synthetic_objectives(opt_.space(), hpo::config_from_json(opt_.space(), json::parse(config_json)));
    return {o.neg_mse, o.acc};
  }

  std::size_t n_trials() const { return opt_.history().size(); }
  std::uint64_t ask_counter() const { return opt_.ask_counter(); }

 private:
  hpo::BayesianOptimizer opt_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of oceanbo";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);

  m.def("default_space_json", [] { return hpo::to_json(hpo::default_space()).dump(); });
  m.def("synthetic_space_json", [] { return hpo::to_json(hpo::synthetic_space()).dump(); });
  m.def("space_hash", [](const std::string& s) { return space_arg(s).hash(); }, py::arg("space_json"));
  m.def(
      "validation_errors",
      [](const std::string& s, const std::string& c) {
        const auto space = space_arg(s);
        return space.validation_errors(hpo::config_from_json(space, json::parse(c)));
      },
      py::arg("space_json"), py::arg("config_json"));
  m.def(
      "encode",
      [](const std::string& s, const std::string& c) {
        const auto space = space_arg(s);
        return hpo::encode(space, hpo::config_from_json(space, json::parse(c)));
      },
      py::arg("space_json"), py::arg("config_json"));
  m.def(
      "decode", [](const std::string& s, const std::vector<double>& x) { return hpo::to_json(hpo::decode(space_arg(s), x)).dump(); },
      py::arg("space_json"), py::arg("coords"));
  m.def(
      "sample_random",
      [](const std::string& s, std::uint64_t seed) {
        Rng rng(seed);
        return hpo::to_json(hpo::sample_random(space_arg(s), rng)).dump();
      },
      py::arg("space_json"), py::arg("seed"));

  m.def("ucb", &hpo::ucb, py::arg("mu"), py::arg("sigma"), py::arg("c"));
  m.def(
      "sample_c",
      [](std::uint64_t seed, int n, double c_mean) {
        Rng rng(seed);
        std::vector<double> out(static_cast<std::size_t>(n));
        for (auto& v : out) v = hpo::sample_c(rng, c_mean);
        return out;
      },
      py::arg("seed"), py::arg("n"), py::arg("c_mean") = 1.96);
  m.def(
      "scalarize",
      [](std::pair<double, double> obj, std::pair<double, double> w, std::pair<double, double> lo,
         std::pair<double, double> hi, bool chebyshev) {
        hpo::ObjectiveBounds b;
        b.lo = {lo.first, lo.second};
        b.hi = {hi.first, hi.second};
        return hpo::scalarize({obj.first, obj.second}, {w.first, w.second}, b,
                              chebyshev ? hpo::Scalarization::kChebyshev : hpo::Scalarization::kLinear);
      },
      py::arg("objectives"), py::arg("weights"), py::arg("lo"), py::arg("hi"), py::arg("chebyshev") = false);

  m.def("non_dominated", [](const Array& a) { return hpo::non_dominated(points_arg(a)); }, py::arg("points"));
  m.def(
      "hypervolume2d",
      [](const Array& a, std::pair<double, double> ref) {
        return hpo::hypervolume2d(points_arg(a), {ref.first, ref.second});
      },
      py::arg("front"), py::arg("ref"));
  m.def(
      "quantile_transform",
      [](const Array& a) {
        return eval::quantile_transform(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
      },
      py::arg("values"));

  py::class_<PyForest>(m, "ExtraTrees")
      .def(py::init<const Array&, const Array&, int, int, double, std::uint64_t>(), py::arg("x"), py::arg("y"),
           py::arg("n_trees") = 100, py::arg("min_samples_split") = 2, py::arg("max_features") = 1.0,
           py::arg("seed") = 0)
      .def("predict", &PyForest::predict, py::arg("x"))
      .def_property_readonly("n_trees", &PyForest::n_trees);

  py::class_<PyOptimizer>(m, "Optimizer")
      .def(py::init<const std::string&, std::uint64_t, int>(), py::arg("space_json") = "", py::arg("seed") = 0,
           py::arg("n_initial") = 10)
      .def("ask", &PyOptimizer::ask, py::arg("q") = 1)
      .def("tell", &PyOptimizer::tell, py::arg("config_json"), py::arg("objectives") = py::none(),
           py::arg("failure") = py::none())
      .def("synthetic", &PyOptimizer::synthetic, py::arg("config_json"))
      .def_property_readonly("n_trials", &PyOptimizer::n_trials)
      .def_property_readonly("ask_counter", &PyOptimizer::ask_counter);

  m.def(
      "rfft2",
      [](const Array& a) {
        if (a.ndim() != 2) throw py::value_error("expected an (H, W) array");
        const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
        fno::Tensor4 x(fno::Shape4{1, 1, h, w});
        std::copy(a.data(), a.data() + a.size(), x.data());
        const auto s = fno::rfft2(x);
        py::array_t<std::complex<double>> out({h, s.shape().w});
        std::copy(s.data(), s.data() + s.size(), out.mutable_data());
        return out;
      },
      py::arg("x"));

  m.def(
      "generate_ensemble",
      [](int sims, int days, int grid, std::uint64_t seed) {
        ocean::GenConfig gen;
        gen.n_sims = sims;
        gen.timesteps_out = days;
        gen.grid = grid;
        gen.seed = seed;
        const auto ens = ocean::generate_ensemble(gen);
        py::array_t<float> data({ens.sims, ens.steps, ens.height, ens.width, ocean::kChannels});
        std::copy(ens.data.begin(), ens.data.end(), data.mutable_data());
        py::array_t<std::uint8_t> mask({ens.height, ens.width});
        std::copy(ens.mask.begin(), ens.mask.end(), mask.mutable_data());
        return py::make_tuple(data, mask, ens.kappas);
      },
      py::arg("sims") = 2, py::arg("days") = 3, py::arg("grid") = 16, py::arg("seed") = 0);
}
