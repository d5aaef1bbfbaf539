#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oceanbo/common/error.hpp"
#include "oceanbo/ocean/dataset.hpp"
#include "oceanbo/ocean/ensemble.hpp"

using namespace oceanbo;
using namespace oceanbo::ocean;

namespace {

GenConfig small_gen() {
  GenConfig g;
  g.n_sims = 5;
  g.timesteps_out = 4;
  g.grid = 16;
  g.seed = 3;
  return g;
}

}  // namespace

TEST_CASE("ensemble shape, mask and finiteness") {
  const auto ens = generate_ensemble(small_gen());
  CHECK(ens.shape() == std::array<int, 5>{5, 4, 16, 16, 5});
  CHECK(ens.data.size() == std::size_t{5} * 4 * 16 * 16 * 5);
  CHECK(ens.mask[0] == 0);
  CHECK(ens.mask[8 * 16 + 8] == 1);
  for (float v : ens.data) REQUIRE(std::isfinite(v));
  for (int h = 0; h < 16; ++h) {
    for (int w = 0; w < 16; ++w) {
      if (ens.mask[static_cast<std::size_t>(h * 16 + w)]) continue;
      for (int c = 0; c < kChannels; ++c) CHECK(ens.at(1, 2, h, w, c) == 0.0f);
    }
  }
  // kappa is constant in space and time and inside its range.
  for (int s = 0; s < 5; ++s) {
    CHECK(ens.kappas[static_cast<std::size_t>(s)] >= 200.0);
    CHECK(ens.kappas[static_cast<std::size_t>(s)] <= 2000.0);
    CHECK(ens.at(s, 3, 8, 8, 4) == static_cast<float>(ens.kappas[static_cast<std::size_t>(s)]));
  }
}

TEST_CASE("generation is deterministic per seed") {
  const auto a = generate_ensemble(small_gen());
  const auto b = generate_ensemble(small_gen());
  CHECK(a.data == b.data);
  auto g = small_gen();
  g.seed = 4;
  CHECK(generate_ensemble(g).data != a.data);
}

TEST_CASE("salt is conserved inside the closed basin") {
  auto g = small_gen();
  g.n_sims = 1;
  g.timesteps_out = 5;
  const auto traj = simulate_trajectory(g, 1000.0, nondim_diffusivity(g, 1000.0), 1);
  const auto mask = basin_mask(g.grid);
  const std::size_t frame = static_cast<std::size_t>(g.grid * g.grid * kChannels);
  auto total = [&](int t) {
    double s = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) s += traj[static_cast<std::size_t>(t) * frame + i * kChannels];
    }
    return s;
  };
  CHECK(total(4) == doctest::Approx(total(0)).epsilon(1e-10));
}

TEST_CASE("too few substeps names the violated bound") {
  auto g = small_gen();
  g.substeps_per_day = 1;
  g.gyre_amplitude = 5.0;
  try {
    simulate_trajectory(g, 500.0, 0.0, 0);
    FAIL("expected a stability error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("advection") != std::string::npos);
  }
  CHECK(auto_substeps(g, 1e-3) > 1);
}

TEST_CASE("ensemble files round trip and detect truncation") {
  const auto ens = generate_ensemble(small_gen());
  const auto stem = (std::filesystem::temp_directory_path() / "oceanbo_ens_test").string();
  save_ensemble(stem, ens);
  const auto back = load_ensemble(stem + ".json");
  CHECK(back.data == ens.data);
  CHECK(back.mask == ens.mask);
  CHECK(back.kappas == ens.kappas);
  const auto paths = ensemble_paths(stem);
  std::filesystem::resize_file(paths.blob, std::filesystem::file_size(paths.blob) - 4);
  CHECK_THROWS_AS(load_ensemble(stem), FormatError);
  std::filesystem::remove(paths.blob);
  CHECK_THROWS_AS(load_ensemble(stem), FormatError);
  std::filesystem::remove(paths.sidecar);
}

TEST_CASE("split sizes and disjointness") {
  const auto s = split_simulations(12, kDefaultRatios, 0);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 2);
  CHECK(s.train.size() == 8);
  std::vector<int> all = s.train;
  all.insert(all.end(), s.val.begin(), s.val.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 12; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
  CHECK(split_simulations(10, kDefaultRatios, 0).val.size() == 2);
  CHECK_THROWS(make_pairs({0}, 1));
  CHECK(make_pairs({2, 4}, 3) == std::vector<Pair>{{2, 0}, {2, 1}, {4, 0}, {4, 1}});
}

TEST_CASE("normalized training data has zero mean and unit spread") {
  const auto ens = generate_ensemble(small_gen());
  const PairedDataset data(ens, split_simulations(ens.sims, kDefaultRatios, 1));
  const auto& mask = data.mask();
  for (int c = 0; c < kStateChannels; ++c) {
    double s = 0.0, ss = 0.0, n = 0.0;
    for (int sim : data.split().train) {
      for (int t = 0; t < data.steps(); ++t) {
        const auto f = data.frame(sim, t);
        for (std::size_t i = 0; i < mask.size(); ++i) {
          if (!mask[i]) continue;
          const double v = f[static_cast<std::size_t>(c) * mask.size() + i];
          s += v;
          ss += v * v;
          n += 1;
        }
      }
    }
    CHECK(s / n == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(ss / n == doctest::Approx(1.0).epsilon(1e-9));
  }
  const auto& norm = data.normalization();
  CHECK(norm.invert(0, norm.apply(0, 35.5)) == doctest::Approx(35.5));
  const auto back = normalization_from_json(to_json(norm));
  CHECK(back.mean == norm.mean);
  CHECK(back.std == norm.std);
  const auto in = data.inputs(data.train_pairs());
  CHECK(in.shape().c == 5);
  CHECK(data.targets(data.val_pairs()).shape().c == 4);
}
