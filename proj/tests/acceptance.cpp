// Acceptance checks. Each criterion prints one PASS/FAIL line; pass
// criterion numbers as arguments to run a subset.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "oceanbo/cli/csv.hpp"
#include "oceanbo/common/error.hpp"
#include "oceanbo/common/seed.hpp"
#include "oceanbo/eval/loss.hpp"
#include "oceanbo/eval/metrics.hpp"
#include "oceanbo/eval/train.hpp"
#include "oceanbo/exec/results_log.hpp"
#include "oceanbo/exec/search.hpp"
#include "oceanbo/exec/workers.hpp"
#include "oceanbo/fno/model.hpp"
#include "oceanbo/fno/spectral.hpp"
#include "oceanbo/forest/extra_trees.hpp"
#include "oceanbo/hpo/optimizer.hpp"
#include "oceanbo/hpo/pareto.hpp"
#include "oceanbo/hpo/space.hpp"
#include "oceanbo/hpo/synthetic.hpp"
#include "oceanbo/ocean/dataset.hpp"
#include "oceanbo/ocean/ensemble.hpp"

#ifndef OCEANBO_CLI_PATH
#define OCEANBO_CLI_PATH "oceanbo"
#endif

using namespace oceanbo;
using json = nlohmann::json;
using fno::Complex;
using fno::Shape4;
using fno::Tensor4;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path work_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("oceanbo_accept_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) { return json::parse(slurp(path)); }

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

// Runs the CLI with output appended to `log`; returns the exit status.
int run_cli(const std::vector<std::string>& args, const fs::path& log) {
  std::string cmd = quote(OCEANBO_CLI_PATH);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " >> " + quote(log.string()) + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Tensor4 random_tensor(Shape4 s, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor4 t(s);
  for (auto& v : t.values()) v = n(rng);
  return t;
}

std::vector<std::uint8_t> disk(int h, int w) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(h * w));
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double y = (i + 0.5) / h - 0.5, x = (j + 0.5) / w - 0.5;
      m[static_cast<std::size_t>(i * w + j)] = x * x + y * y < 0.25;
    }
  }
  return m;
}

// ---------------------------------------------------------------- 1

struct GradProblem {
  fno::FnoConfig config;
  Tensor4 x, target;
  std::vector<double> clim;
  std::vector<std::uint8_t> mask;
  double alpha = 0.5;
};

// Loss plus, for every activation input, which side of each kink it lies on.
std::pair<double, std::vector<int>> loss_and_sides(const GradProblem& p, const fno::ParamSet& params) {
  fno::ForwardCache cache;
  const auto y = fno::forward(p.config, params, p.x, &cache);
  const double loss = eval::composite_loss(y, p.target, p.clim, p.mask, p.alpha).loss;
  std::vector<int> sides;
  auto mark = [&](fno::Activation a, const Tensor4& z) {
    for (double k : fno::activation_kinks(a)) {
      for (double v : z.values()) sides.push_back(v < k ? 0 : 1);
    }
  };
  mark(p.config.lift_act, cache.lift_pre);
  for (const auto& z : cache.proj_pre) mark(p.config.proj_act, z);
  return {loss, sides};
}

Outcome gradient_suite() {
  const auto& acts = fno::all_activations();
  const std::array<fno::PaddingType, 4> pads{fno::PaddingType::kConstant, fno::PaddingType::kReflect,
                                             fno::PaddingType::kReplicate, fno::PaddingType::kCircular};
  const int cases = static_cast<int>(acts.size());
  const double h = 1e-4;
  const double floor = 1e-6;
  Rng rng(101);
  double worst = 0.0;
  std::string worst_at;
  int checked = 0, skipped = 0;
  std::set<int> pads_seen, coords_seen;
  for (int i = 0; i < cases; ++i) {
    GradProblem p;
    auto& c = p.config;
    c.lift_act = acts[static_cast<std::size_t>(i)];
    c.proj_act = acts[static_cast<std::size_t>((i + 7) % cases)];
    c.padding = i % 5 != 4;
    c.padding_type = pads[static_cast<std::size_t>(i % 4)];
    c.pad_width = 1 + i % 3;
    c.coord_feat = i % 2 == 0;
    c.num_fno = 1 + i % 2;
    c.num_latent_feat = 3 + i % 4;
    c.num_modes = 2 + i % 3;
    c.num_proj_layers = 1 + i % 3;
    c.proj_size = 3 + i % 3;
    if (c.padding) pads_seen.insert(i % 4);
    coords_seen.insert(c.coord_feat ? 1 : 0);

    const int grid = 8;
    p.x = random_tensor(Shape4{2, c.in_channels, grid, grid}, rng);
    p.target = random_tensor(Shape4{2, c.out_channels, grid, grid}, rng);
    p.clim = random_tensor(Shape4{1, c.out_channels, grid, grid}, rng, 0.3).values();
    p.mask = disk(grid, grid);
    p.alpha = std::uniform_real_distribution<double>(0.1, 0.9)(rng);

    auto params = fno::init_params(c, 1000 + static_cast<std::uint64_t>(i));
    for (auto& prm : params.params()) {
      double rms = 0.0;
      for (double v : prm.values) rms += v * v;
      rms = std::sqrt(rms / static_cast<double>(prm.values.size()));
      std::normal_distribution<double> noise(0.0, 0.5 * std::max(rms, 0.05));
      for (auto& v : prm.values) v += noise(rng);
    }

    fno::ForwardCache cache;
    const auto y = fno::forward(c, params, p.x, &cache);
    const auto lr = eval::composite_loss(y, p.target, p.clim, p.mask, p.alpha);
    const auto grads = fno::backward(cache, lr.grad);
    const auto base_sides = loss_and_sides(p, params).second;

    for (std::size_t t = 0; t < params.size(); ++t) {
      auto& prm = params.params()[t];
      const std::size_t n = prm.values.size();
      std::vector<std::size_t> picks(n);
      for (std::size_t k = 0; k < n; ++k) picks[k] = k;
      std::shuffle(picks.begin(), picks.end(), rng);
      picks.resize(std::min<std::size_t>(n, 16));
      for (std::size_t k : picks) {
        const double v0 = prm.values[k];
        std::array<double, 4> f{};
        bool crossed = false;
        const std::array<double, 4> offs{-2 * h, -h, h, 2 * h};
        for (std::size_t s = 0; s < 4; ++s) {
          prm.values[k] = v0 + offs[s];
          auto [loss, sides] = loss_and_sides(p, params);
          f[s] = loss;
          if (sides != base_sides) crossed = true;
        }
        prm.values[k] = v0;
        if (crossed) {
          ++skipped;
          continue;
        }
        const double numeric = (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h);
        const double analytic = grads.params()[t].values[k];
        const double rel =
            std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
        ++checked;
        if (rel > worst) {
          worst = rel;
          worst_at = prm.name + "[" + std::to_string(k) + "] case " + std::to_string(i) + " (analytic " +
                     fmt(analytic) + ", numeric " + fmt(numeric) + ")";
        }
      }
    }
  }
  const bool coverage = pads_seen.size() == 4 && coords_seen.size() == 2;
  return {coverage && worst < 1e-5 && checked > 0,
          std::to_string(cases) + " configs, " + std::to_string(checked) + " entries (" + std::to_string(skipped) +
              " skipped at kinks), max rel err " + fmt(worst) + (worst_at.empty() ? "" : " at " + worst_at) +
              (coverage ? "" : ", incomplete padding/coord coverage")};
}

// ---------------------------------------------------------------- 2

std::vector<Complex> identity_weights(const fno::SpectralBasis& b, int channels) {
  const std::size_t modes = static_cast<std::size_t>(b.rows()) * static_cast<std::size_t>(b.cols());
  const std::size_t block = static_cast<std::size_t>(channels) * static_cast<std::size_t>(channels);
  std::vector<Complex> w(modes * block);
  for (std::size_t k = 0; k < modes; ++k) {
    for (int i = 0; i < channels; ++i) w[k * block + static_cast<std::size_t>(i * channels + i)] = 1.0;
  }
  return w;
}

Outcome spectral_identity() {
  Rng rng(202);
  double worst_identity = 0.0;
  for (int grid : {8, 9, 16, 17}) {
    const auto basis = fno::SpectralBasis::truncated(grid, grid, fno::max_modes(grid, grid));
    const auto x = random_tensor(Shape4{2, 3, grid, grid}, rng);
    const auto w = identity_weights(basis, 3);
    const auto y = fno::spectral_conv(basis, x, w.data(), 3);
    for (std::size_t i = 0; i < x.size(); ++i) worst_identity = std::max(worst_identity, std::abs(y.values()[i] - x.values()[i]));
  }

  double worst_ratio = 0.0;
  for (int grid : {8, 9, 16}) {
    for (int m = 2; m < fno::max_modes(grid, grid); ++m) {
      const auto basis = fno::SpectralBasis::truncated(grid, grid, m);
      const auto x = random_tensor(Shape4{2, 3, grid, grid}, rng);
      const auto w = identity_weights(basis, 3);
      const auto y = fno::spectral_conv(basis, x, w.data(), 3);
      const auto spec = fno::rfft2(y);
      double kept = 0.0, dropped = 0.0;
      const auto& s = spec.shape();
      for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
          for (int r = 0; r < s.h; ++r) {
            const bool row_kept = r < m || r > grid - m;
            for (int k = 0; k < s.w; ++k) {
              const double e = std::norm(spec.at(n, c, r, k));
              (row_kept && k < m ? kept : dropped) += e;
            }
          }
        }
      }
      worst_ratio = std::max(worst_ratio, dropped / kept);
    }
  }
  // Synthesis only ever touches retained modes, so the discarded energy is
  // whatever rounding leaves behind in the analysis of the output.
  const bool pass = worst_identity < 1e-10 && worst_ratio < 1e-24;
  return {pass, "identity max abs err " + fmt(worst_identity) + ", discarded/kept energy " + fmt(worst_ratio)};
}

// ---------------------------------------------------------------- 3

struct OracleMetrics {
  double mse, rse, log_rse, acc, log_one_minus_acc;
};

double oracle_log10(double x) {
  if (!(x > 0.0)) return -15.0;
  return std::min(15.0, std::max(-15.0, std::log10(x)));
}

std::vector<OracleMetrics> oracle_metrics(const Tensor4& p, const Tensor4& t, const std::vector<double>& clim,
                                          const std::vector<std::uint8_t>& mask) {
  const auto& s = p.shape();
  std::vector<OracleMetrics> out;
  for (int c = 0; c < s.c; ++c) {
    double se = 0.0, sd = 0.0, sab = 0.0, saa = 0.0, sbb = 0.0;
    double count = 0.0;
    for (int i = 0; i < s.h; ++i) {
      for (int j = 0; j < s.w; ++j) {
        if (!mask[static_cast<std::size_t>(i * s.w + j)]) continue;
        const double k = clim[static_cast<std::size_t>((c * s.h + i) * s.w + j)];
        for (int n = 0; n < s.n; ++n) {
          const double pv = p.at(n, c, i, j), tv = t.at(n, c, i, j);
          se += (tv - pv) * (tv - pv);
          sd += (tv - k) * (tv - k);
          sab += (pv - k) * (tv - k);
          saa += (pv - k) * (pv - k);
          sbb += (tv - k) * (tv - k);
          count += 1.0;
        }
      }
    }
    OracleMetrics m{};
    m.mse = se / count;
    m.rse = se / sd;
    m.log_rse = oracle_log10(m.rse);
    m.acc = sab / (std::sqrt(saa) * std::sqrt(sbb) + 1e-12);
    m.log_one_minus_acc = oracle_log10(1.0 - m.acc);
    out.push_back(m);
  }
  return out;
}

std::vector<double> oracle_quantiles(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0.0, equal = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (v[j] < v[i]) less += 1.0;
      if (v[j] == v[i]) equal += 1.0;
    }
    out[i] = (less + (equal - 1.0) / 2.0) / static_cast<double>(n - 1);
  }
  return out;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

Outcome metric_oracles() {
  Rng rng(303);
  std::uniform_int_distribution<int> dim(3, 10), batch(1, 4), chans(1, 5);
  int metric_mismatch = 0, quantile_mismatch = 0;
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const Shape4 s{batch(rng), chans(rng), dim(rng), dim(rng)};
    const auto p = random_tensor(s, rng);
    const auto t = random_tensor(s, rng);
    const auto clim = random_tensor(Shape4{1, s.c, s.h, s.w}, rng, 0.5).values();
    std::vector<std::uint8_t> mask(s.plane());
    std::bernoulli_distribution coin(0.7);
    for (auto& m : mask) m = coin(rng);
    mask[0] = 1;
    const auto got = eval::metrics(p, t, clim, mask);
    const auto want = oracle_metrics(p, t, clim, mask);
    for (std::size_t c = 0; c < got.size(); ++c) {
      const std::array<std::pair<double, double>, 5> pairs{{{got[c].mse, want[c].mse},
                                                            {got[c].rse, want[c].rse},
                                                            {got[c].log_rse, want[c].log_rse},
                                                            {got[c].acc, want[c].acc},
                                                            {got[c].log_one_minus_acc, want[c].log_one_minus_acc}}};
      for (const auto& [a, b] : pairs) {
        worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
        if (!close(a, b, 1e-12)) ++metric_mismatch;
      }
    }

    std::uniform_int_distribution<int> len(1, 80), level(0, 12);
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    const bool ties = inst % 2 == 0;
    for (auto& x : v) x = ties ? static_cast<double>(level(rng)) : std::normal_distribution<double>()(rng);
    const auto q = eval::quantile_transform(v);
    const auto qo = oracle_quantiles(v);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!close(q[i], qo[i], 1e-12)) ++quantile_mismatch;
    }
  }

  ocean::GenConfig g;
  g.n_sims = 6;
  g.timesteps_out = 4;
  g.grid = 16;
  g.seed = 3;
  const auto ens = ocean::generate_ensemble(g);
  const ocean::PairedDataset data(ens, ocean::split_simulations(g.n_sims, ocean::kDefaultRatios, 0));
  const auto targets = data.targets(data.train_pairs());
  const auto base = eval::constant_predictor_metrics(targets, data.climatology(), data.mask());
  double worst_log_rse = 0.0;
  for (const auto& m : base) worst_log_rse = std::max(worst_log_rse, std::abs(m.log_rse));

  const bool pass = metric_mismatch == 0 && quantile_mismatch == 0 && worst_log_rse <= 1e-9;
  return {pass, "metric mismatches " + std::to_string(metric_mismatch) + " (max rel diff " + fmt(worst) +
                    "), quantile mismatches " + std::to_string(quantile_mismatch) + ", constant predictor |log RSE| " +
                    fmt(worst_log_rse)};
}

// ---------------------------------------------------------------- 4

std::vector<std::size_t> brute_front(const std::vector<hpo::Point2>& pts) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      const bool ge = pts[j][0] >= pts[i][0] && pts[j][1] >= pts[i][1];
      const bool gt = pts[j][0] > pts[i][0] || pts[j][1] > pts[i][1];
      dominated = ge && gt;
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

// Counts unit cells of the integer lattice dominated by some point.
double cell_count_volume(const std::vector<hpo::Point2>& pts, const hpo::Point2& ref, int top) {
  double cells = 0.0;
  for (int x = static_cast<int>(ref[0]); x < top; ++x) {
    for (int y = static_cast<int>(ref[1]); y < top; ++y) {
      for (const auto& p : pts) {
        if (p[0] >= x + 1 && p[1] >= y + 1) {
          cells += 1.0;
          break;
        }
      }
    }
  }
  return cells;
}

Outcome pareto_oracle() {
  Rng rng(404);
  int front_mismatch = 0;
  for (int set = 0; set < 200; ++set) {
    const int n = std::uniform_int_distribution<int>(1, 500)(rng);
    std::vector<hpo::Point2> pts(static_cast<std::size_t>(n));
    std::uniform_int_distribution<int> lattice(0, 15);
    std::normal_distribution<double> normal;
    for (auto& p : pts) {
      if (set % 2 == 0) {
        p = {static_cast<double>(lattice(rng)), static_cast<double>(lattice(rng))};
      } else {
        p = {normal(rng), normal(rng)};
      }
    }
    if (hpo::non_dominated(pts) != brute_front(pts)) ++front_mismatch;
  }

  int hv_mismatch = 0;
  double worst = 0.0;
  for (int f = 0; f < 50; ++f) {
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    const int top = 20;
    const hpo::Point2 ref{static_cast<double>(f % 3), static_cast<double>(f % 4)};
    std::uniform_int_distribution<int> cx(static_cast<int>(ref[0]), top), cy(static_cast<int>(ref[1]), top);
    std::vector<hpo::Point2> pts(static_cast<std::size_t>(n));
    for (auto& p : pts) p = {static_cast<double>(cx(rng)), static_cast<double>(cy(rng))};
    const double got = hpo::hypervolume2d(pts, ref);
    const double want = cell_count_volume(pts, ref, top);
    worst = std::max(worst, std::abs(got - want));
    if (std::abs(got - want) > 1e-12) ++hv_mismatch;
  }
  return {front_mismatch == 0 && hv_mismatch == 0,
          "front mismatches " + std::to_string(front_mismatch) + "/200, hypervolume mismatches " +
              std::to_string(hv_mismatch) + "/50 (max abs diff " + fmt(worst) + ")"};
}

// ---------------------------------------------------------------- 5

Outcome surrogate_invariants() {
  Rng rng(505);
  std::uniform_real_distribution<double> unit(0.0, 1.0), wide(-0.5, 1.5);
  const int n = 60, d = 4;
  forest::RowMatrix x(n, d);
  std::vector<double> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = unit(rng);
    y[static_cast<std::size_t>(i)] = std::sin(6.0 * x(i, 0)) + x(i, 1) * x(i, 2) + std::normal_distribution<double>(0, 0.3)(rng);
  }
  const double lo = *std::min_element(y.begin(), y.end());
  const double hi = *std::max_element(y.begin(), y.end());
  forest::ForestConfig cfg;
  cfg.seed = 9;
  const auto model = forest::ExtraTreesRegressor::fit(x, y, cfg);
  int out_of_range = 0;
  std::vector<double> q(static_cast<std::size_t>(d));
  for (int i = 0; i < 10000; ++i) {
    for (auto& v : q) v = wide(rng);
    const auto ms = model.predict_mean_std(q);
    if (ms.mean < lo || ms.mean > hi) ++out_of_range;
    for (std::size_t t = 0; t < model.n_trees(); t += 17) {
      const double v = model.predict_tree(t, q);
      if (v < lo || v > hi) ++out_of_range;
    }
  }

  const std::vector<double> flat(static_cast<std::size_t>(n), 2.718);
  const auto constant = forest::ExtraTreesRegressor::fit(x, flat, cfg);
  int constant_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    for (auto& v : q) v = wide(rng);
    const auto ms = constant.predict_mean_std(q);
    if (ms.mean != 2.718 || ms.std != 0.0) ++constant_bad;
  }

  forest::ForestConfig one = cfg;
  one.n_trees = 1;
  const auto single = forest::ExtraTreesRegressor::fit(x, y, one);
  int single_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    for (auto& v : q) v = wide(rng);
    if (single.predict_mean_std(q).std != 0.0) ++single_bad;
  }

  const auto again = forest::ExtraTreesRegressor::fit(x, y, cfg);
  bool same = again.n_trees() == model.n_trees();
  for (int i = 0; i < 1000 && same; ++i) {
    for (auto& v : q) v = wide(rng);
    const auto a = model.predict_mean_std(q), b = again.predict_mean_std(q);
    same = a.mean == b.mean && a.std == b.std;
  }
  const bool pass = out_of_range == 0 && constant_bad == 0 && single_bad == 0 && same;
  return {pass, "out of range " + std::to_string(out_of_range) + ", constant-target misses " +
                    std::to_string(constant_bad) + ", single-tree nonzero std " + std::to_string(single_bad) +
                    ", deterministic " + (same ? "yes" : "no")};
}

// ---------------------------------------------------------------- 6

hpo::Point2 as_point(const hpo::ObjectiveVector& o) { return {o.neg_mse, o.acc}; }

double front_volume(const std::vector<hpo::Point2>& pts, const hpo::Point2& ref) {
  std::vector<hpo::Point2> above;
  for (const auto& p : pts) {
    if (p[0] >= ref[0] && p[1] >= ref[1]) above.push_back(p);
  }
  return above.empty() ? 0.0 : hpo::hypervolume2d(above, ref);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome bo_efficacy() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto space = hpo::synthetic_space();
  const int budget = 100, runs = 10;

  // Reference: componentwise median of a fixed random sample.
  Rng ref_rng(6060);
  std::vector<double> o1, o2;
  for (int i = 0; i < 2000; ++i) {
    const auto o = hpo::synthetic_objectives(space, hpo::sample_random(space, ref_rng));
    o1.push_back(o.neg_mse);
    o2.push_back(o.acc);
  }
  const hpo::Point2 ref{median(o1), median(o2)};

  std::vector<double> bo, random;
  for (int r = 0; r < runs; ++r) {
    hpo::OptimizerSettings settings;
    settings.seed = 600 + static_cast<std::uint64_t>(r);
    hpo::BayesianOptimizer opt(space, settings);
    std::vector<hpo::Point2> pts;
    for (int t = 0; t < budget; ++t) {
      const auto config = opt.ask(1).front();
      hpo::TrialRecord rec;
      rec.trial_id = t;
      rec.config = config;
      rec.objectives = hpo::synthetic_objectives(space, config);
      pts.push_back(as_point(*rec.objectives));
      opt.tell(rec);
    }
    bo.push_back(front_volume(pts, ref));

    Rng rng(700 + static_cast<std::uint64_t>(r));
    std::vector<hpo::Point2> rpts;
    for (int t = 0; t < budget; ++t) rpts.push_back(as_point(hpo::synthetic_objectives(space, hpo::sample_random(space, rng))));
    random.push_back(front_volume(rpts, ref));
  }
  const double mb = median(bo), mr = median(random);
  const double elapsed = seconds_since(t0);
  const bool pass = mb >= 1.05 * mr && elapsed < 120.0;
  return {pass, "median hypervolume BO " + fmt(mb) + " vs random " + fmt(mr) + " (ratio " + fmt(mb / mr) + "), " +
                    fmt(elapsed) + " s"};
}

// ---------------------------------------------------------------- 7

Outcome stopper_behavior() {
  ocean::GenConfig g;
  g.n_sims = 5;
  g.timesteps_out = 6;
  g.grid = 8;
  g.seed = 4;
  const auto ens = ocean::generate_ensemble(g);
  const auto data = std::make_shared<ocean::PairedDataset>(ens, ocean::split_simulations(g.n_sims, ocean::kDefaultRatios, 0));

  auto small = eval::baseline_configuration();
  small.set("num_FNO", std::int64_t{2});
  small.set("num_latent_feat", std::int64_t{4});
  small.set("num_modes", std::int64_t{3});
  small.set("proj_size", std::int64_t{4});
  auto adversarial = small;
  adversarial.set("optimizer", std::string("SGD"));
  adversarial.set("lr", 1e-6);
  adversarial.set("weight_decay", 0.0);

  const int grace = 3;
  // Per-trial stopper settings; the configurations travel in the jobs.
  std::map<std::int64_t, eval::StopperConfig> stoppers;
  stoppers[0] = {false, grace, false, 10.0};
  stoppers[1] = {true, grace, false, 10.0};
  stoppers[2] = {false, grace, true, 1e-4};
  exec::Evaluator evaluator = [data, stoppers](const exec::Job& job) {
    eval::TrainOptions opt;
    opt.max_epochs = 6;
    opt.seed = job.seed;
    opt.stoppers = stoppers.at(job.trial_id);
    const auto res = eval::train(job.config, *data, opt);
    hpo::TrialRecord r;
    r.objectives = res.objectives;
    r.failure = res.failure;
    r.stopper = res.stopper;
    r.epochs_run = res.epochs_run;
    return r;
  };

  const auto dir = work_dir("stoppers");
  const std::string log = (dir / "results.jsonl").string();
  exec::LogHeader header;
  header.space = hpo::default_space();
  header.settings.seed = 7;
  header.seed = 7;
  header.budget = 3;
  header.workers = 1;
  header.space_hash = header.space.hash();
  header.code_version = "acceptance";
  exec::create_log(log, header);
  {
    exec::LineWriter pending(exec::pending_path(log));
    const std::array<hpo::Configuration, 3> configs{small, adversarial, small};
    for (std::int64_t id = 0; id < 3; ++id) {
      pending.append(exec::to_json(exec::PendingEntry{id, configs[static_cast<std::size_t>(id)],
                                                      exec::trial_seed(7, id), 1}));
    }
  }
  exec::ThreadPool pool(1, evaluator);
  exec::resume_search(log, pool);

  auto trials = exec::read_log(log).trials;
  std::sort(trials.begin(), trials.end(), [](const auto& a, const auto& b) { return a.trial_id < b.trial_id; });
  std::vector<std::string> problems;
  if (trials.size() != 3) problems.push_back("logged " + std::to_string(trials.size()) + " trials");
  if (trials.size() == 3) {
    const auto& ok = trials[0];
    const auto& cp = trials[1];
    const auto& et = trials[2];
    if (!ok.ok()) problems.push_back("reference trial failed: " + ok.failure.value_or("?"));
    if (cp.failure != std::optional<std::string>("constant_predictor") || cp.stopper != hpo::Stopper::kConstantPredictor)
      problems.push_back("trial 1 tag " + cp.failure.value_or("none"));
    if (cp.epochs_run != grace) problems.push_back("trial 1 stopped at epoch " + std::to_string(cp.epochs_run));
    if (et.failure != std::optional<std::string>("epoch_time") || et.stopper != hpo::Stopper::kEpochTime)
      problems.push_back("trial 2 tag " + et.failure.value_or("none"));
    if (et.epochs_run != 1) problems.push_back("trial 2 stopped at epoch " + std::to_string(et.epochs_run));
    if (ok.ok()) {
      for (const auto* t : {&cp, &et}) {
        if (!t->imputed || !(*t->imputed == *ok.objectives)) {
          problems.push_back("trial " + std::to_string(t->trial_id) + " imputed value is not the worst observed");
        }
      }
    }
  }
  std::string detail = problems.empty() ? "constant_predictor at epoch " + std::to_string(grace) +
                                              ", epoch_time at epoch 1, imputed objectives logged"
                                        : "";
  for (const auto& p : problems) detail += (detail.empty() ? "" : "; ") + p;
  return {problems.empty(), detail};
}

// ---------------------------------------------------------------- 8

std::optional<double> best_trial_mse(const fs::path& log) {
  const auto trials = exec::read_log(log.string()).trials;
  std::optional<double> best;
  for (const auto& t : trials) {
    if (!t.ok()) continue;
    const double mse = -t.objectives->neg_mse;
    if (!best || mse < *best) best = mse;
  }
  return best;
}

std::string rollout_problem(const fs::path& csv) {
  if (!fs::exists(csv)) return csv.string() + " missing";
  const auto table = cli::parse_csv(slurp(csv));
  if (table.size() < 2) return csv.string() + " has no rows";
  const auto& head = table.front();
  auto col = [&](const std::string& name) {
    const auto it = std::find(head.begin(), head.end(), name);
    if (it == head.end()) throw FormatError(csv.string() + " lacks column " + name);
    return static_cast<std::size_t>(it - head.begin());
  };
  const auto step = col("step"), rse = col("mean_log_rse"), acc = col("mean_log_one_minus_acc");
  long prev = -1;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const long s = std::stol(table[i][step]);
    if (s < prev) return csv.string() + " step index decreases at row " + std::to_string(i);
    prev = s;
    for (auto c : {rse, acc}) {
      if (!std::isfinite(std::stod(table[i][c]))) return csv.string() + " non-finite metric at row " + std::to_string(i);
    }
  }
  if (prev != 9) return csv.string() + " ends at step " + std::to_string(prev);
  return "";
}

Outcome pipeline() {
  const auto root = work_dir("pipeline");
  const fs::path log = root / "commands.log";
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  const int workers = 4;
  // The per-epoch wall-time limit assumes a core per worker.
  const double limit = 10.0 * std::max(1.0, std::ceil(static_cast<double>(workers) / cores));
  std::vector<std::string> problems;
  auto cli = [&](std::vector<std::string> args) {
    std::ofstream(log, std::ios::app) << "$ oceanbo";
    for (const auto& a : args) std::ofstream(log, std::ios::app) << " " << a;
    std::ofstream(log, std::ios::app) << "\n";
    const int rc = run_cli(args, log);
    if (rc != 0) problems.push_back(args.front() + " exited " + std::to_string(rc));
    return rc == 0;
  };

  const auto t0 = std::chrono::steady_clock::now();
  const auto data = (root / "data").string();
  cli({"gen-data", "--sims", "12", "--days", "10", "--grid", "32", "--seed", "7", "--out", data});

  std::vector<double> searched, baseline;
  double pipeline_seconds = 0.0;
  for (std::uint64_t seed : {7, 8, 9}) {
    const auto s = std::to_string(seed);
    const auto search = (root / ("search" + s)).string();
    const bool searched_ok = cli({"search", "--data", data, "--workers", std::to_string(workers), "--budget", "24",
                                  "--seed", s, "--max-epochs", "15", "--epoch-time-limit", fmt(limit), "--out", search});
    if (seed == 7 && searched_ok) {
      const auto retrain = (root / "retrain7").string();
      const auto base60 = (root / "baseline60_7").string();
      cli({"train", "--data", data, "--config", search + "/best.json", "--epochs", "60", "--seed", s, "--out", retrain});
      cli({"rollout", "--data", data, "--checkpoint", retrain + "/checkpoint.bin", "--steps", "9", "--out", retrain});
      cli({"baseline", "--data", data, "--epochs", "60", "--seed", s, "--out", base60});
      cli({"rollout", "--data", data, "--checkpoint", base60 + "/checkpoint.bin", "--steps", "9", "--out", base60});
      pipeline_seconds = seconds_since(t0);
      for (const auto& dir : {retrain, base60}) {
        const auto p = rollout_problem(fs::path(dir) / "rollout.csv");
        if (!p.empty()) problems.push_back(p);
      }
    }
    const auto base15 = (root / ("baseline15_" + s)).string();
    if (cli({"baseline", "--data", data, "--epochs", "15", "--seed", s, "--out", base15})) {
      baseline.push_back(read_json(fs::path(base15) / "metrics.json").at("validation").at("mse").get<double>());
    }
    if (searched_ok) {
      if (auto m = best_trial_mse(fs::path(search) / "results.jsonl")) searched.push_back(*m);
    }
  }

  bool ok_b = false;
  std::string b_detail = std::to_string(searched.size()) + " of 3 seeds with a successful search trial, " +
                         std::to_string(baseline.size()) + " of 3 baselines";
  if (searched.size() == 3 && baseline.size() == 3) {
    ok_b = median(searched) <= median(baseline);
    b_detail = "median searched-best val MSE " + fmt(median(searched)) + " vs baseline " + fmt(median(baseline));
  }
  const bool ok_a = pipeline_seconds > 0.0 && pipeline_seconds < 45.0 * 60.0;
  const bool pass = ok_a && ok_b && problems.empty();
  std::string detail = "(a) seed-7 pipeline " + fmt(pipeline_seconds / 60.0) + " min on " + std::to_string(cores) +
                       " core(s), epoch limit " + fmt(limit) + " s; (b) " + b_detail + "; (c) " +
                       (problems.empty() ? "rollouts complete" : "");
  for (std::size_t i = 0; i < problems.size(); ++i) detail += (i ? "; " : "") + problems[i];
  detail += "; artifacts in " + root.string();
  return {pass, detail};
}

// ---------------------------------------------------------------- 9

std::size_t complete_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

std::string complete_prefix(const std::string& text) {
  const auto cut = text.rfind('\n');
  return cut == std::string::npos ? "" : text.substr(0, cut + 1);
}

Outcome restart() {
  const auto dir = work_dir("restart");
  const auto out = (dir / "search").string();
  const fs::path log_file = dir / "commands.log";
  const fs::path results = fs::path(out) / "results.jsonl";

  const pid_t pid = ::fork();
  if (pid < 0) return {false, "fork failed"};
  if (pid == 0) {
    ::setpgid(0, 0);
    const std::string logs = log_file.string();
    if (!std::freopen(logs.c_str(), "a", stdout) || !std::freopen(logs.c_str(), "a", stderr)) ::_exit(126);
    ::execl(OCEANBO_CLI_PATH, OCEANBO_CLI_PATH, "search", "--evaluator", "synthetic", "--eval-delay", "0.25",
            "--jitter", "--workers", "2", "--budget", "20", "--seed", "9", "--out", out.c_str(),
            static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
  std::size_t seen = 0;
  while (std::chrono::steady_clock::now() < deadline) {
    if (fs::exists(results)) {
      seen = complete_lines(slurp(results));
      if (seen >= 8) break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  ::kill(-pid, SIGKILL);
  int status = 0;
  ::waitpid(pid, &status, 0);
  const std::string before = slurp(results);
  const std::size_t killed_at = complete_lines(before) - 1;
  if (killed_at >= 20) return {false, "search finished before it could be killed"};

  const int rc = run_cli({"search", "--resume", "--out", out}, log_file);
  const std::string after = slurp(results);
  const auto trials = exec::read_log(results.string()).trials;
  std::set<std::int64_t> ids;
  for (const auto& t : trials) ids.insert(t.trial_id);
  const std::string prefix = complete_prefix(before);
  const bool identical = after.compare(0, prefix.size(), prefix) == 0;
  const bool complete = trials.size() == 20 && ids.size() == 20 && *ids.begin() == 0 && *ids.rbegin() == 19;
  const bool pass = rc == 0 && identical && complete;
  return {pass, "killed after " + std::to_string(killed_at) + " logged trials, resume exit " + std::to_string(rc) +
                    ", " + std::to_string(trials.size()) + " trials with " + std::to_string(ids.size()) +
                    " distinct ids, prefix " + (identical ? "byte-identical" : "changed")};
}

// ---------------------------------------------------------------- 10

struct ExpectedDim {
  std::string name;
  std::string type;
  std::vector<std::string> choices;
  double lo = 0.0, hi = 0.0;
  bool log = false;
};

Outcome table_fidelity() {
  const std::vector<std::string> acts{"relu",     "leaky_relu", "prelu",      "relu6",    "elu",
                                      "selu",     "silu",       "gelu",       "sigmoid",  "logsigmoid",
                                      "softplus", "softshrink", "softsign",   "tanh",     "tanhshrink",
                                      "threshold", "hardtanh",  "identity",   "squareplus"};
  const std::vector<std::string> flags{"True", "False"};
  const std::vector<ExpectedDim> table{
      {"padding", "cat", flags},
      {"padding_type", "cat", {"constant", "reflect", "replicate", "circular"}},
      {"coord_feat", "cat", flags},
      {"lift_act", "cat", acts},
      {"num_FNO", "int", {}, 2, 16},
      {"num_latent_feat", "int", {}, 2, 64},
      {"num_modes", "int", {}, 2, 32},
      {"num_proj_layers", "int", {}, 2, 16},
      {"proj_size", "int", {}, 2, 16},
      {"proj_act", "cat", acts},
      {"alpha", "float", {}, 0.0, 1.0},
      {"optimizer", "cat", {"Adadelta", "Adagrad", "Adam", "AdamW", "RMSprop", "SGD"}},
      {"lr", "float", {}, 1e-6, 1e-2, true},
      {"weight_decay", "float", {}, 0.0, 0.1},
      {"batch_size", "int", {}, 2, 64},
  };
  const auto space = hpo::default_space();
  const auto round = hpo::space_from_json(json::parse(hpo::to_json(space).dump()));
  std::vector<std::string> problems;
  if (!(round == space) || round.hash() != space.hash()) problems.push_back("JSON round trip changed the space");
  if (round.size() != table.size()) problems.push_back("dimension count " + std::to_string(round.size()));
  for (std::size_t i = 0; i < std::min(table.size(), round.size()); ++i) {
    const auto& e = table[i];
    const auto& d = round.dimensions()[i];
    if (d.name != e.name) {
      problems.push_back("dimension " + std::to_string(i) + " is " + d.name + ", expected " + e.name);
      continue;
    }
    if (e.type == "cat") {
      const auto* c = std::get_if<hpo::CategoricalDim>(&d.kind);
      if (!c || c->choices != e.choices) problems.push_back(e.name + " choices differ");
    } else if (e.type == "int") {
      const auto* c = std::get_if<hpo::IntegerDim>(&d.kind);
      if (!c || c->first() != static_cast<std::int64_t>(e.lo) || c->last() != static_cast<std::int64_t>(e.hi))
        problems.push_back(e.name + " range differs");
    } else {
      const auto* c = std::get_if<hpo::FloatDim>(&d.kind);
      if (!c || c->lo != e.lo || c->hi != e.hi || (c->scale == hpo::Scale::kLog) != e.log)
        problems.push_back(e.name + " range or scale differs");
    }
  }
  const bool counts = hpo::activation_names().size() == 19 && hpo::optimizer_names().size() == 6 &&
                      hpo::padding_type_names().size() == 4;
  if (!counts) problems.push_back("choice list sizes differ");
  std::string detail = problems.empty() ? "15 dimensions match field for field after a JSON round trip" : "";
  for (const auto& p : problems) detail += (detail.empty() ? "" : "; ") + p;
  return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Outcome()>> criteria{
      {1, gradient_suite},     {2, spectral_identity}, {3, metric_oracles}, {4, pareto_oracle},
      {5, surrogate_invariants}, {6, bo_efficacy},       {7, stopper_behavior}, {8, pipeline},
      {9, restart},            {10, table_fidelity}};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (!criteria.count(n)) {
      std::cerr << "unknown criterion '" << argv[i] << "'\n";
      return 2;
    }
    selected.push_back(n);
  }
  if (selected.empty()) {
    for (const auto& [n, f] : criteria) selected.push_back(n);
  }
  bool all = true;
  for (int n : selected) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria.at(n)();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << o.detail << " [" << fmt(seconds_since(t0))
              << " s]" << std::endl;
  }
  return all ? 0 : 1;
}
