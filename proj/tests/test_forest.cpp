#include <doctest.h>

#include <random>

#include "oceanbo/forest/extra_trees.hpp"

using namespace oceanbo::forest;

namespace {

void make_data(int n, int d, std::uint64_t seed, RowMatrix& x, std::vector<double>& y) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  x.resize(n, d);
  y.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      x(i, j) = u(rng);
      s += (x(i, j) - 0.3) * (x(i, j) - 0.3);
    }
    y[static_cast<std::size_t>(i)] = s;
  }
}

}  // namespace

TEST_CASE("forest interpolates a smooth function") {
  RowMatrix x;
  std::vector<double> y;
  make_data(200, 3, 1, x, y);
  const auto f = ExtraTreesRegressor::fit(x, y, {});
  CHECK(f.n_trees() == 100);
  // Fully grown trees reproduce the training targets.
  for (int i = 0; i < 10; ++i) {
    const auto p = f.predict_mean_std({x.row(i).data(), 3});
    CHECK(p.mean == doctest::Approx(y[static_cast<std::size_t>(i)]).epsilon(1e-9));
  }
}

TEST_CASE("same seed gives the same forest") {
  RowMatrix x;
  std::vector<double> y;
  make_data(50, 4, 2, x, y);
  ForestConfig c;
  c.seed = 7;
  c.n_trees = 10;
  const auto a = ExtraTreesRegressor::fit(x, y, c);
  const auto b = ExtraTreesRegressor::fit(x, y, c);
  const std::vector<double> q{0.1, 0.5, 0.9, 0.2};
  CHECK(a.predict_mean_std(q).mean == b.predict_mean_std(q).mean);
  CHECK(a.predict_mean_std(q).std == b.predict_mean_std(q).std);
  c.seed = 8;
  const auto other = ExtraTreesRegressor::fit(x, y, c);
  CHECK(other.predict_mean_std(q).mean != a.predict_mean_std(q).mean);
}

TEST_CASE("min_samples_split bounds leaf sizes") {
  RowMatrix x;
  std::vector<double> y;
  make_data(64, 2, 3, x, y);
  ForestConfig c;
  c.min_samples_split = 10;
  c.n_trees = 5;
  const auto f = ExtraTreesRegressor::fit(x, y, c);
  for (const auto& tree : f.trees()) {
    for (const auto& node : tree) {
      if (node.feature >= 0) CHECK(node.count >= 10);
    }
  }
}
