#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "otune/surrogate.hpp"  // RowMatrix

namespace otune {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

/// CART regression tree over inputs in [0,1]^d, squared-error splits.
class RegressionTree {
 public:
  struct FitConfig {
    int max_depth = 8;
    int min_samples_split = 4;
    std::size_t feature_subset = 0;  // 0 means consider every feature
  };

  static RegressionTree fit(const RowMatrix& X, const Eigen::VectorXd& y,
                            std::span<const std::size_t> sample_idx, const FitConfig& cfg,
                            std::mt19937_64& rng);

  double predict(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  /// Axis-aligned cell of each leaf within [0,1]^dim, with its value.
  struct Leaf {
    std::vector<double> lo;
    std::vector<double> hi;
    double value = 0.0;
  };
  std::vector<Leaf> leaves(std::size_t dim) const;

  std::vector<TreeNode> nodes_;  // exposed for serialization
};

class RandomForest {
 public:
  static RandomForest fit(const RowMatrix& X, const Eigen::VectorXd& y, int n_trees,
                          const RegressionTree::FitConfig& cfg, std::uint64_t seed);

  double predict(std::span<const double> x) const;
  const std::vector<RegressionTree>& trees() const { return trees_; }

 private:
  std::vector<RegressionTree> trees_;
};

/// Gradient boosting with squared loss: each round fits a shallow tree to
/// the current residuals.
class GradientBoostedTrees {
 public:
  struct Config {
    int rounds = 150;
    int max_depth = 3;
    double learning_rate = 0.1;
    int min_samples_split = 2;
  };

  GradientBoostedTrees() = default;
  static GradientBoostedTrees fit(const RowMatrix& X, const Eigen::VectorXd& y, const Config& cfg,
                                  std::uint64_t seed);

  double predict(std::span<const double> x) const;

  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;
};

}  // namespace otune
