#include "oceanbo/forest/extra_trees.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "oceanbo/common/error.hpp"
#include "oceanbo/common/seed.hpp"

namespace oceanbo::forest {

namespace {

struct Builder {
  const RowMatrix& x;
  std::span<const double> y;
  const ForestConfig& config;
  Rng rng;
  std::vector<int> rows;
  std::vector<int> features;
  std::size_t n_candidates;

  Builder(const RowMatrix& x_, std::span<const double> y_, const ForestConfig& cfg, std::uint64_t seed)
      : x(x_), y(y_), config(cfg), rng(seed), rows(static_cast<std::size_t>(x_.rows())),
        features(static_cast<std::size_t>(x_.cols())) {
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(features.begin(), features.end(), 0);
    const auto d = static_cast<double>(x.cols());
    n_candidates = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(cfg.max_features * d)), 1,
                                           static_cast<std::size_t>(x.cols()));
  }

  // Leaf value: the mean of the node targets, kept inside their range.
  static double leaf_value(std::span<const double> y, const std::vector<int>& rows, int begin, int end,
                           double lo, double hi) {
    if (lo == hi) return lo;
    double sum = 0.0;
    for (int i = begin; i < end; ++i) sum += y[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
    return std::clamp(sum / (end - begin), lo, hi);
  }

  ExtraTreesRegressor::Tree build() {
    ExtraTreesRegressor::Tree tree;
    struct Task {
      int node, begin, end;
    };
    tree.emplace_back();
    std::vector<Task> stack{{0, 0, static_cast<int>(rows.size())}};
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      const int n = task.end - task.begin;

      double ylo = y[static_cast<std::size_t>(rows[static_cast<std::size_t>(task.begin)])];
      double yhi = ylo;
      double sum = 0.0;
      for (int i = task.begin; i < task.end; ++i) {
        const double v = y[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
        ylo = std::min(ylo, v);
        yhi = std::max(yhi, v);
        sum += v;
      }
      auto make_leaf = [&]() {
        auto& node = tree[static_cast<std::size_t>(task.node)];
        node.feature = -1;
        node.value = leaf_value(y, rows, task.begin, task.end, ylo, yhi);
        node.count = n;
      };
      if (n < config.min_samples_split || ylo == yhi) {
        make_leaf();
        continue;
      }

      std::vector<int> candidates;
      if (n_candidates == features.size()) {
        candidates = features;
      } else {
        candidates = features;
        std::shuffle(candidates.begin(), candidates.end(), rng);
        candidates.resize(n_candidates);
        std::sort(candidates.begin(), candidates.end());
      }

      int best_feature = -1;
      double best_threshold = 0.0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int f : candidates) {
        double lo = x(rows[static_cast<std::size_t>(task.begin)], f);
        double hi = lo;
        for (int i = task.begin + 1; i < task.end; ++i) {
          const double v = x(rows[static_cast<std::size_t>(i)], f);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        if (!(lo < hi)) continue;
        double t = lo + unit(rng) * (hi - lo);
        if (t >= hi) t = lo;
        double left_sum = 0.0;
        int left_n = 0;
        for (int i = task.begin; i < task.end; ++i) {
          const int r = rows[static_cast<std::size_t>(i)];
          if (x(r, f) <= t) {
            left_sum += y[static_cast<std::size_t>(r)];
            ++left_n;
          }
        }
        const int right_n = n - left_n;
        const double right_sum = sum - left_sum;
        // Reduction in sum of squared errors, up to the constant parent term.
        const double score = left_sum * left_sum / left_n + right_sum * right_sum / right_n;
        if (score > best_score) {
          best_score = score;
          best_feature = f;
          best_threshold = t;
        }
      }
      if (best_feature < 0) {
        make_leaf();
        continue;
      }

      auto mid_it = std::partition(rows.begin() + task.begin, rows.begin() + task.end,
                                   [&](int r) { return x(r, best_feature) <= best_threshold; });
      const int mid = static_cast<int>(mid_it - rows.begin());
      const int left = static_cast<int>(tree.size());
      tree.emplace_back();
      tree.emplace_back();
      auto& node = tree[static_cast<std::size_t>(task.node)];
      node.feature = best_feature;
      node.threshold = best_threshold;
      node.left = left;
      node.right = left + 1;
      node.count = n;
      node.value = sum / n;
      stack.push_back({left + 1, mid, task.end});
      stack.push_back({left, task.begin, mid});
    }
    return tree;
  }
};

}  // namespace

ExtraTreesRegressor ExtraTreesRegressor::fit(const RowMatrix& x, std::span<const double> y,
                                             const ForestConfig& config) {
  if (x.rows() == 0) throw ConfigError("ExtraTreesRegressor::fit: no training rows");
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ShapeError("ExtraTreesRegressor::fit: X has " + std::to_string(x.rows()) + " rows but y has " +
                     std::to_string(y.size()));
  }
  if (config.n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (!(config.max_features > 0.0 && config.max_features <= 1.0))
    throw ConfigError("max_features must be in (0, 1]");
  if (!x.allFinite()) throw ConfigError("ExtraTreesRegressor::fit: non-finite feature value");
  for (double v : y) {
    if (!std::isfinite(v)) throw ConfigError("ExtraTreesRegressor::fit: non-finite target");
  }

  ExtraTreesRegressor forest;
  forest.n_features_ = static_cast<std::size_t>(x.cols());
  forest.trees_.reserve(static_cast<std::size_t>(config.n_trees));
  for (int t = 0; t < config.n_trees; ++t) {
    Builder builder(x, y, config, derive_seed(config.seed, static_cast<std::uint64_t>(t)));
    forest.trees_.push_back(builder.build());
  }
  return forest;
}

double ExtraTreesRegressor::predict_tree(std::size_t tree, std::span<const double> x) const {
  const Tree& nodes = trees_.at(tree);
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const Node& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

MeanStd ExtraTreesRegressor::predict_mean_std(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw ShapeError("predict: expected " + std::to_string(n_features_) + " features, got " +
                     std::to_string(x.size()));
  }
  const std::size_t n = trees_.size();
  std::vector<double> preds(n);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    preds[t] = predict_tree(t, x);
    lo = std::min(lo, preds[t]);
    hi = std::max(hi, preds[t]);
    sum += preds[t];
  }
  MeanStd out;
  out.mean = std::clamp(sum / static_cast<double>(n), lo, hi);
  if (lo == hi) return out;
  double ss = 0.0;
  for (double p : preds) ss += (p - out.mean) * (p - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(n));
  return out;
}

}  // namespace oceanbo::forest
