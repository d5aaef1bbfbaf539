#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace oceanbo::forest {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ForestConfig {
  int n_trees = 100;
  int min_samples_split = 2;
  // Fraction of features drawn as split candidates at each node.
  double max_features = 1.0;
  std::uint64_t seed = 0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Extremely randomized trees for regression. Each tree sees the full
// sample; at every node one uniform threshold is drawn per candidate
// feature and the candidate with the largest variance reduction wins.
class ExtraTreesRegressor {
 public:
  struct Node {
    // feature < 0 marks a leaf.
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    int count = 0;
  };
  using Tree = std::vector<Node>;

  static ExtraTreesRegressor fit(const RowMatrix& x, std::span<const double> y,
                                 const ForestConfig& config);

  // Mean and population std across per-tree predictions.
  MeanStd predict_mean_std(std::span<const double> x) const;
  double predict_tree(std::size_t tree, std::span<const double> x) const;

  std::size_t n_trees() const { return trees_.size(); }
  std::size_t n_features() const { return n_features_; }
  const std::vector<Tree>& trees() const { return trees_; }

 private:
  std::vector<Tree> trees_;
  std::size_t n_features_ = 0;
};

}  // namespace oceanbo::forest
