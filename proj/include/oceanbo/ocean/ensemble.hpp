#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace oceanbo::ocean {

inline constexpr int kChannels = 5;
inline constexpr int kStateChannels = 4;
const std::array<std::string, kChannels>& channel_names();

// Synthetic wind-driven basin: a time-dependent double gyre stirring two
// tracers inside a disk, one simulation per sampled kappa. Space is the
// unit square, time is measured in days.
struct GenConfig {
  int n_sims = 12;
  int timesteps_out = 10;  // daily frames, the first is the initial state
  int grid = 32;
  double kappa_lo = 200.0;
  double kappa_hi = 2000.0;
  // kappa maps linearly onto this nondimensional diffusivity range.
  double diffusivity_lo = 5e-4;
  double diffusivity_hi = 5e-3;
  int substeps_per_day = 0;  // 0 picks the smallest stable count
  double gyre_amplitude = 0.02;
  double gyre_period = 10.0;
  double gyre_epsilon = 0.25;
  std::uint64_t seed = 0;
};

void validate(const GenConfig& gen);
nlohmann::json to_json(const GenConfig& gen);
GenConfig gen_config_from_json(const nlohmann::json& j);

double nondim_diffusivity(const GenConfig& gen, double kappa);

// Stable substeps per day for a diffusivity, from the bound 3 pi A on the
// face speeds.
int auto_substeps(const GenConfig& gen, double diffusivity);

// Cells whose centre lies in the inscribed disk, row-major H x W.
std::vector<std::uint8_t> basin_mask(int grid);

// Frames stored as float32 in (sim, time, height, width, channel) order.
struct Ensemble {
  GenConfig gen;
  int sims = 0;
  int steps = 0;
  int height = 0;
  int width = 0;
  std::vector<double> kappas;
  std::vector<std::uint8_t> mask;
  std::vector<float> data;

  std::size_t index(int sim, int t, int h, int w, int c) const {
    return (((static_cast<std::size_t>(sim) * static_cast<std::size_t>(steps) + static_cast<std::size_t>(t)) *
                 static_cast<std::size_t>(height) +
             static_cast<std::size_t>(h)) *
                static_cast<std::size_t>(width) +
            static_cast<std::size_t>(w)) *
               kChannels +
           static_cast<std::size_t>(c);
  }
  float at(int sim, int t, int h, int w, int c) const { return data[index(sim, t, h, w, c)]; }
  std::array<int, 5> shape() const { return {sims, steps, height, width, kChannels}; }
};

// One trajectory of `timesteps_out` frames, each grid*grid*5 doubles in
// (h, w, c) order. Throws ConfigError naming the violated stability bound
// when an explicit substep count is too small.
std::vector<double> simulate_trajectory(const GenConfig& gen, double kappa, double diffusivity,
                                        std::uint64_t sim_seed);

Ensemble generate_ensemble(const GenConfig& gen);

// `path` may be a stem or either of `<stem>.bin` / `<stem>.json`.
struct EnsemblePaths {
  std::string blob;
  std::string sidecar;
};
EnsemblePaths ensemble_paths(const std::string& path);

void save_ensemble(const std::string& path, const Ensemble& ens);
// Throws FormatError on a missing or corrupt sidecar or a blob whose length
// disagrees with the declared shape.
Ensemble load_ensemble(const std::string& path);

}  // namespace oceanbo::ocean
