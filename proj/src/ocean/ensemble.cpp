#include "oceanbo/ocean/ensemble.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

#include "oceanbo/common/error.hpp"
#include "oceanbo/common/seed.hpp"

namespace oceanbo::ocean {

namespace {

constexpr double kPi = std::numbers::pi;

static_assert(std::endian::native == std::endian::little, "ensemble I/O assumes a little-endian host");

struct Bump {
  double x, y, amp;
};

// Three Gaussian bumps of random sign inside the basin.
std::vector<Bump> random_bumps(Rng& rng, double scale) {
  std::uniform_real_distribution<double> radius(0.0, 0.3);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> amp(-scale, scale);
  std::vector<Bump> out;
  for (int k = 0; k < 3; ++k) {
    const double r = radius(rng);
    const double a = angle(rng);
    out.push_back({0.5 + r * std::cos(a), 0.5 + r * std::sin(a), amp(rng)});
  }
  return out;
}

double bumps_at(const std::vector<Bump>& bumps, double x, double y) {
  double s = 0.0;
  for (const auto& b : bumps) {
    const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
    s += b.amp * std::exp(-d2 / (2.0 * 0.08 * 0.08));
  }
  return s;
}

std::string file_ext_stripped(const std::string& path) {
  for (const char* ext : {".json", ".bin"}) {
    const std::string e(ext);
    if (path.size() > e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0) {
      return path.substr(0, path.size() - e.size());
    }
  }
  return path;
}

}  // namespace

const std::array<std::string, kChannels>& channel_names() {
  static const std::array<std::string, kChannels> names{"salinity", "temperature", "u", "v", "kappa"};
  return names;
}

void validate(const GenConfig& g) {
  if (g.n_sims < 1) throw ConfigError("n_sims must be >= 1");
  if (g.timesteps_out < 1) throw ConfigError("timesteps_out must be >= 1");
  if (g.grid < 8) throw ConfigError("grid must be >= 8");
  if (!(g.kappa_lo < g.kappa_hi)) throw ConfigError("kappa range must satisfy lo < hi");
  if (!(g.diffusivity_lo >= 0.0 && g.diffusivity_lo <= g.diffusivity_hi)) {
    throw ConfigError("diffusivity range must satisfy 0 <= lo <= hi");
  }
  if (g.substeps_per_day < 0) throw ConfigError("substeps_per_day must be >= 0");
  if (!(g.gyre_period > 0.0)) throw ConfigError("gyre_period must be positive");
  if (!(g.gyre_amplitude >= 0.0)) throw ConfigError("gyre_amplitude must be >= 0");
}

nlohmann::json to_json(const GenConfig& g) {
  return {{"n_sims", g.n_sims},
          {"timesteps_out", g.timesteps_out},
          {"grid", g.grid},
          {"kappa_range", {g.kappa_lo, g.kappa_hi}},
          {"diffusivity_range", {g.diffusivity_lo, g.diffusivity_hi}},
          {"substeps_per_day", g.substeps_per_day},
          {"gyre_amplitude", g.gyre_amplitude},
          {"gyre_period", g.gyre_period},
          {"gyre_epsilon", g.gyre_epsilon},
          {"seed", g.seed}};
}

GenConfig gen_config_from_json(const nlohmann::json& j) {
  GenConfig g;
  g.n_sims = j.value("n_sims", g.n_sims);
  g.timesteps_out = j.value("timesteps_out", g.timesteps_out);
  g.grid = j.value("grid", g.grid);
  if (j.contains("kappa_range")) {
    g.kappa_lo = j.at("kappa_range").at(0).get<double>();
    g.kappa_hi = j.at("kappa_range").at(1).get<double>();
  }
  if (j.contains("diffusivity_range")) {
    g.diffusivity_lo = j.at("diffusivity_range").at(0).get<double>();
    g.diffusivity_hi = j.at("diffusivity_range").at(1).get<double>();
  }
  g.substeps_per_day = j.value("substeps_per_day", g.substeps_per_day);
  g.gyre_amplitude = j.value("gyre_amplitude", g.gyre_amplitude);
  g.gyre_period = j.value("gyre_period", g.gyre_period);
  g.gyre_epsilon = j.value("gyre_epsilon", g.gyre_epsilon);
  g.seed = j.value("seed", g.seed);
  return g;
}

double nondim_diffusivity(const GenConfig& g, double kappa) {
  const double t = (kappa - g.kappa_lo) / (g.kappa_hi - g.kappa_lo);
  return g.diffusivity_lo + t * (g.diffusivity_hi - g.diffusivity_lo);
}

int auto_substeps(const GenConfig& g, double diffusivity) {
  const double dx = 1.0 / g.grid;
  const double speed = 2.0 * kPi * g.gyre_amplitude * (1.0 + 2.0 * std::abs(g.gyre_epsilon));
  // Keeps every update a convex combination: outflow through up to two
  // faces plus the four-neighbour diffusion stencil.
  const double rate = 2.0 * speed / dx + 4.0 * diffusivity / (dx * dx);
  if (rate <= 0.0) return 1;
  return std::max(1, static_cast<int>(std::ceil(rate / 0.9)));
}

std::vector<std::uint8_t> basin_mask(int grid) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid), 0);
  const double dx = 1.0 / grid;
  for (int j = 0; j < grid; ++j) {
    for (int i = 0; i < grid; ++i) {
      const double x = (i + 0.5) * dx - 0.5;
      const double y = (j + 0.5) * dx - 0.5;
      mask[static_cast<std::size_t>(j * grid + i)] = x * x + y * y <= 0.25 ? 1 : 0;
    }
  }
  return mask;
}

std::vector<double> simulate_trajectory(const GenConfig& g, double kappa, double diffusivity,
                                        std::uint64_t sim_seed) {
  validate(g);
  const int n = g.grid;
  const double dx = 1.0 / n;
  const int substeps = g.substeps_per_day > 0 ? g.substeps_per_day : auto_substeps(g, diffusivity);
  const double dt = 1.0 / substeps;
  const auto cells = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  const auto mask = basin_mask(n);
  auto id = [n](int j, int i) { return static_cast<std::size_t>(j * n + i); };

  if (dt * diffusivity / (dx * dx) > 0.25) {
    throw ConfigError("diffusion stability violated: dt*kappa/dx^2 = " +
                      std::to_string(dt * diffusivity / (dx * dx)) + " > 0.25");
  }

  Rng rng(derive_seed(sim_seed, 1));
  const auto salt_bumps = random_bumps(rng, 0.3);
  const auto heat_bumps = random_bumps(rng, 1.0);
  std::vector<double> salt(cells, 0.0), heat(cells, 0.0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!mask[id(j, i)]) continue;
      const double x = (i + 0.5) * dx;
      const double y = (j + 0.5) * dx;
      salt[id(j, i)] = 35.0 + std::tanh((y - 0.5) / 0.1) + bumps_at(salt_bumps, x, y);
      heat[id(j, i)] = 15.0 + 3.0 * std::cos(2.0 * kPi * x) * std::sin(kPi * y) + bumps_at(heat_bumps, x, y);
    }
  }

  // Face velocities: u on east faces (n x n, last column unused), v on north faces.
  std::vector<double> u(cells, 0.0), v(cells, 0.0);
  std::vector<double> sx(static_cast<std::size_t>(n + 1)), sy(static_cast<std::size_t>(n + 1));
  for (int k = 0; k <= n; ++k) sy[static_cast<std::size_t>(k)] = std::sin(kPi * k * dx);
  auto open_east = [&](int j, int i) { return i + 1 < n && mask[id(j, i)] && mask[id(j, i + 1)]; };
  auto open_north = [&](int j, int i) { return j + 1 < n && mask[id(j, i)] && mask[id(j + 1, i)]; };

  auto set_velocity = [&](double t) {
    const double s = g.gyre_epsilon * std::sin(2.0 * kPi * t / g.gyre_period);
    for (int k = 0; k <= n; ++k) {
      const double xx = 2.0 * k * dx;
      const double f = s * xx * xx + (1.0 - 2.0 * s) * xx;
      sx[static_cast<std::size_t>(k)] = g.gyre_amplitude * std::sin(kPi * f);
    }
    // psi at corner (j, i) = sx[i] * sy[j]
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const auto c = id(j, i);
        const auto ip = static_cast<std::size_t>(i + 1);
        const auto jp = static_cast<std::size_t>(j + 1);
        u[c] = open_east(j, i) ? -sx[ip] * (sy[jp] - sy[static_cast<std::size_t>(j)]) / dx : 0.0;
        v[c] = open_north(j, i) ? sy[jp] * (sx[ip] - sx[static_cast<std::size_t>(i)]) / dx : 0.0;
      }
    }
  };

  std::vector<double> frames(static_cast<std::size_t>(g.timesteps_out) * cells * kChannels, 0.0);
  auto record = [&](int day) {
    double* f = frames.data() + static_cast<std::size_t>(day) * cells * kChannels;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const auto c = id(j, i);
        if (!mask[c]) continue;
        const double uw = i > 0 ? u[id(j, i - 1)] : 0.0;
        const double vs = j > 0 ? v[id(j - 1, i)] : 0.0;
        double* px = f + c * kChannels;
        px[0] = salt[c];
        px[1] = heat[c];
        px[2] = 0.5 * (u[c] + uw);
        px[3] = 0.5 * (v[c] + vs);
        px[4] = kappa;
      }
    }
  };

  std::vector<double> dsalt(cells), dheat(cells);
  auto step = [&]() {
    std::fill(dsalt.begin(), dsalt.end(), 0.0);
    std::fill(dheat.begin(), dheat.end(), 0.0);
    auto exchange = [&](std::size_t a, std::size_t b, double vel) {
      // Flux from a to b: upwind advection plus down-gradient diffusion.
      const double fs = (vel > 0.0 ? vel * salt[a] : vel * salt[b]) - diffusivity * (salt[b] - salt[a]) / dx;
      const double fh = (vel > 0.0 ? vel * heat[a] : vel * heat[b]) - diffusivity * (heat[b] - heat[a]) / dx;
      dsalt[a] -= fs;
      dsalt[b] += fs;
      dheat[a] -= fh;
      dheat[b] += fh;
    };
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        if (open_east(j, i)) exchange(id(j, i), id(j, i + 1), u[id(j, i)]);
        if (open_north(j, i)) exchange(id(j, i), id(j + 1, i), v[id(j, i)]);
      }
    }
    const double r = dt / dx;
    for (std::size_t c = 0; c < cells; ++c) {
      salt[c] += r * dsalt[c];
      heat[c] += r * dheat[c];
    }
  };

  double umax_limit = 0.9 * dx / dt;
  set_velocity(0.0);
  record(0);
  for (int day = 1; day < g.timesteps_out; ++day) {
    for (int k = 0; k < substeps; ++k) {
      const double t = (day - 1) + k * dt;
      set_velocity(t);
      double umax = 0.0;
      for (std::size_t c = 0; c < cells; ++c) umax = std::max({umax, std::abs(u[c]), std::abs(v[c])});
      if (umax > umax_limit) {
        throw ConfigError("advection stability violated: dt*max|u|/dx = " + std::to_string(dt * umax / dx) +
                          " > 0.9");
      }
      step();
    }
    set_velocity(static_cast<double>(day));
    record(day);
  }
  return frames;
}

Ensemble generate_ensemble(const GenConfig& g) {
  validate(g);
  Ensemble ens;
  ens.gen = g;
  ens.sims = g.n_sims;
  ens.steps = g.timesteps_out;
  ens.height = g.grid;
  ens.width = g.grid;
  ens.mask = basin_mask(g.grid);
  const std::size_t per_sim =
      static_cast<std::size_t>(g.timesteps_out) * static_cast<std::size_t>(g.grid) * g.grid * kChannels;
  ens.data.resize(per_sim * static_cast<std::size_t>(g.n_sims));
  for (int s = 0; s < g.n_sims; ++s) {
    const std::uint64_t sim_seed = derive_seed(g.seed, static_cast<std::uint64_t>(s));
    Rng rng(derive_seed(sim_seed, 0));
    const double kappa = std::uniform_real_distribution<double>(g.kappa_lo, g.kappa_hi)(rng);
    ens.kappas.push_back(kappa);
    const auto frames = simulate_trajectory(g, kappa, nondim_diffusivity(g, kappa), sim_seed);
    std::transform(frames.begin(), frames.end(), ens.data.begin() + static_cast<std::ptrdiff_t>(per_sim * s),
                   [](double x) { return static_cast<float>(x); });
  }
  return ens;
}

EnsemblePaths ensemble_paths(const std::string& path) {
  const std::string stem = file_ext_stripped(path);
  return {stem + ".bin", stem + ".json"};
}

void save_ensemble(const std::string& path, const Ensemble& ens) {
  const auto paths = ensemble_paths(path);
  if (ens.data.size() != static_cast<std::size_t>(ens.sims) * ens.steps * ens.height * ens.width * kChannels) {
    throw ShapeError("save_ensemble: data length does not match the shape");
  }
  nlohmann::json side;
  side["format"] = "oceanbo-ensemble";
  side["dtype"] = "float32";
  side["byte_order"] = "little";
  side["layout"] = {"sim", "time", "height", "width", "channel"};
  side["shape"] = ens.shape();
  side["channels"] = channel_names();
  side["kappas"] = ens.kappas;
  nlohmann::json rows = nlohmann::json::array();
  for (int h = 0; h < ens.height; ++h) {
    std::string row;
    for (int w = 0; w < ens.width; ++w) row += ens.mask[static_cast<std::size_t>(h * ens.width + w)] ? '1' : '0';
    rows.push_back(row);
  }
  side["mask"] = rows;
  side["seed"] = ens.gen.seed;
  side["gen"] = to_json(ens.gen);

  auto parent = std::filesystem::path(paths.blob).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  {
    std::ofstream out(paths.blob + ".tmp", std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write '" + paths.blob + "'");
    out.write(reinterpret_cast<const char*>(ens.data.data()),
              static_cast<std::streamsize>(ens.data.size() * sizeof(float)));
    if (!out) throw FormatError("short write to '" + paths.blob + "'");
  }
  {
    std::ofstream out(paths.sidecar + ".tmp", std::ios::trunc);
    if (!out) throw FormatError("cannot write '" + paths.sidecar + "'");
    out << side.dump(1) << "\n";
  }
  std::filesystem::rename(paths.blob + ".tmp", paths.blob);
  std::filesystem::rename(paths.sidecar + ".tmp", paths.sidecar);
}

Ensemble load_ensemble(const std::string& path) {
  const auto paths = ensemble_paths(path);
  std::ifstream side_in(paths.sidecar);
  if (!side_in) throw FormatError("missing ensemble sidecar '" + paths.sidecar + "'");
  Ensemble ens;
  try {
    const auto side = nlohmann::json::parse(side_in);
    if (side.value("dtype", "") != "float32" || side.value("byte_order", "") != "little") {
      throw FormatError("'" + paths.sidecar + "': expected little-endian float32 data");
    }
    const auto shape = side.at("shape").get<std::vector<int>>();
    if (shape.size() != 5 || shape[4] != kChannels) {
      throw FormatError("'" + paths.sidecar + "': shape must be (sims, time, height, width, 5)");
    }
    for (int d : shape) {
      if (d < 1) throw FormatError("'" + paths.sidecar + "': non-positive dimension");
    }
    ens.sims = shape[0];
    ens.steps = shape[1];
    ens.height = shape[2];
    ens.width = shape[3];
    ens.kappas = side.at("kappas").get<std::vector<double>>();
    if (ens.kappas.size() != static_cast<std::size_t>(ens.sims)) {
      throw FormatError("'" + paths.sidecar + "': kappas length differs from the simulation count");
    }
    const auto rows = side.at("mask").get<std::vector<std::string>>();
    if (rows.size() != static_cast<std::size_t>(ens.height)) throw FormatError("'" + paths.sidecar + "': bad mask");
    for (const auto& r : rows) {
      if (r.size() != static_cast<std::size_t>(ens.width)) throw FormatError("'" + paths.sidecar + "': bad mask");
      for (char ch : r) ens.mask.push_back(ch == '1' ? 1 : 0);
    }
    ens.gen = gen_config_from_json(side.value("gen", nlohmann::json::object()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("corrupt ensemble sidecar '" + paths.sidecar + "': " + e.what());
  }

  std::ifstream blob(paths.blob, std::ios::binary);
  if (!blob) throw FormatError("missing ensemble data '" + paths.blob + "'");
  const std::string bytes((std::istreambuf_iterator<char>(blob)), std::istreambuf_iterator<char>());
  const std::size_t expected =
      static_cast<std::size_t>(ens.sims) * ens.steps * ens.height * ens.width * kChannels;
  if (bytes.size() != expected * sizeof(float)) {
    throw FormatError("ensemble length mismatch: '" + paths.blob + "' holds " + std::to_string(bytes.size()) +
                      " bytes, the sidecar shape needs " + std::to_string(expected * sizeof(float)));
  }
  ens.data.resize(expected);
  std::memcpy(ens.data.data(), bytes.data(), bytes.size());
  return ens;
}

}  // namespace oceanbo::ocean
