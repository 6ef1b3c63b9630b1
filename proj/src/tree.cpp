#include "otune/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "otune/errors.hpp"
#include "otune/rng.hpp"

namespace otune {

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = std::numeric_limits<double>::infinity();  // summed child SSE
};

// Best SSE split of `idx` on `feature`, or none when all values coincide.
SplitChoice best_split_on_feature(const RowMatrix& X, const Eigen::VectorXd& y,
                                  std::vector<std::size_t>& idx, int feature) {
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double va = X(static_cast<Eigen::Index>(a), feature);
    const double vb = X(static_cast<Eigen::Index>(b), feature);
    if (va != vb) return va < vb;
    return a < b;
  });

  const std::size_t n = idx.size();
  double total_sum = 0.0;
  for (std::size_t i : idx) total_sum += y(static_cast<Eigen::Index>(i));

  SplitChoice best;
  double left_sum = 0.0, left_sq = 0.0;
  double total_sq = 0.0;
  for (std::size_t i : idx) {
    const double v = y(static_cast<Eigen::Index>(i));
    total_sq += v * v;
  }

  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double yv = y(static_cast<Eigen::Index>(idx[k]));
    left_sum += yv;
    left_sq += yv * yv;
    const double xv = X(static_cast<Eigen::Index>(idx[k]), feature);
    const double xn = X(static_cast<Eigen::Index>(idx[k + 1]), feature);
    if (xv == xn) continue;
    const double nl = static_cast<double>(k + 1);
    const double nr = static_cast<double>(n - k - 1);
    const double right_sum = total_sum - left_sum;
    const double right_sq = total_sq - left_sq;
    const double sse = (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
    if (sse < best.score - 1e-15) {
      best.score = sse;
      best.feature = feature;
      best.threshold = 0.5 * (xv + xn);
    }
  }
  return best;
}

}  // namespace

RegressionTree RegressionTree::fit(const RowMatrix& X, const Eigen::VectorXd& y,
                                   std::span<const std::size_t> sample_idx, const FitConfig& cfg,
                                   std::mt19937_64& rng) {
  if (sample_idx.empty()) throw ArgumentError("regression tree needs samples");
  const auto d = static_cast<std::size_t>(X.cols());

  RegressionTree tree;

  struct Work {
    int node;
    std::vector<std::size_t> idx;
    int depth;
  };

  auto make_leaf = [&](int node, const std::vector<std::size_t>& idx) {
    double sum = 0.0;
    for (std::size_t i : idx) sum += y(static_cast<Eigen::Index>(i));
    tree.nodes_[node].feature = -1;
    tree.nodes_[node].value = sum / static_cast<double>(idx.size());
  };

  tree.nodes_.push_back({});
  std::vector<Work> stack;
  stack.push_back({0, std::vector<std::size_t>(sample_idx.begin(), sample_idx.end()), 0});

  while (!stack.empty()) {
    Work w = std::move(stack.back());
    stack.pop_back();

    bool constant = true;
    for (std::size_t i : w.idx)
      if (y(static_cast<Eigen::Index>(i)) != y(static_cast<Eigen::Index>(w.idx[0]))) {
        constant = false;
        break;
      }
    if (w.depth >= cfg.max_depth || w.idx.size() < static_cast<std::size_t>(cfg.min_samples_split) ||
        constant) {
      make_leaf(w.node, w.idx);
      continue;
    }

    std::vector<int> features(d);
    std::iota(features.begin(), features.end(), 0);
    if (cfg.feature_subset > 0 && cfg.feature_subset < d) {
      std::shuffle(features.begin(), features.end(), rng);
      features.resize(cfg.feature_subset);
      std::sort(features.begin(), features.end());
    }

    SplitChoice best;
    std::vector<std::size_t> scratch;
    for (int f : features) {
      scratch = w.idx;
      const SplitChoice s = best_split_on_feature(X, y, scratch, f);
      if (s.feature >= 0 && s.score < best.score) best = s;
    }
    if (best.feature < 0) {
      make_leaf(w.node, w.idx);
      continue;
    }

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : w.idx) {
      if (X(static_cast<Eigen::Index>(i), best.feature) <= best.threshold)
        left_idx.push_back(i);
      else
        right_idx.push_back(i);
    }
    if (left_idx.empty() || right_idx.empty()) {
      make_leaf(w.node, w.idx);
      continue;
    }

    const int left_node = static_cast<int>(tree.nodes_.size());
    tree.nodes_.push_back({});
    const int right_node = static_cast<int>(tree.nodes_.size());
    tree.nodes_.push_back({});
    tree.nodes_[w.node].feature = best.feature;
    tree.nodes_[w.node].threshold = best.threshold;
    tree.nodes_[w.node].left = left_node;
    tree.nodes_[w.node].right = right_node;
    stack.push_back({right_node, std::move(right_idx), w.depth + 1});
    stack.push_back({left_node, std::move(left_idx), w.depth + 1});
  }
  return tree;
}

double RegressionTree::predict(std::span<const double> x) const {
  int node = 0;
  while (nodes_[node].feature >= 0) {
    node = x[static_cast<std::size_t>(nodes_[node].feature)] <= nodes_[node].threshold
               ? nodes_[node].left
               : nodes_[node].right;
  }
  return nodes_[node].value;
}

std::vector<RegressionTree::Leaf> RegressionTree::leaves(std::size_t dim) const {
  std::vector<Leaf> out;
  struct Frame {
    int node;
    std::vector<double> lo, hi;
  };
  std::vector<Frame> stack;
  stack.push_back({0, std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)});
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    const TreeNode& n = nodes_[f.node];
    if (n.feature < 0) {
      out.push_back({std::move(f.lo), std::move(f.hi), n.value});
      continue;
    }
    Frame left{n.left, f.lo, f.hi};
    left.hi[static_cast<std::size_t>(n.feature)] =
        std::min(left.hi[static_cast<std::size_t>(n.feature)], n.threshold);
    Frame right{n.right, std::move(f.lo), std::move(f.hi)};
    right.lo[static_cast<std::size_t>(n.feature)] =
        std::max(right.lo[static_cast<std::size_t>(n.feature)], n.threshold);
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }
  return out;
}

RandomForest RandomForest::fit(const RowMatrix& X, const Eigen::VectorXd& y, int n_trees,
                               const RegressionTree::FitConfig& cfg, std::uint64_t seed) {
  if (X.rows() < 1) throw ArgumentError("random forest needs samples");
  RandomForest forest;
  const auto n = static_cast<std::size_t>(X.rows());
  for (int t = 0; t < n_trees; ++t) {
    auto rng = make_rng(mix64(seed, 0x464f5245ULL, static_cast<std::uint64_t>(t)));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> bootstrap(n);
    for (auto& i : bootstrap) i = pick(rng);
    std::sort(bootstrap.begin(), bootstrap.end());
    forest.trees_.push_back(RegressionTree::fit(X, y, bootstrap, cfg, rng));
  }
  return forest;
}

double RandomForest::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

GradientBoostedTrees GradientBoostedTrees::fit(const RowMatrix& X, const Eigen::VectorXd& y,
                                               const Config& cfg, std::uint64_t seed) {
  if (X.rows() < 1) throw ArgumentError("boosting needs samples");
  GradientBoostedTrees model;
  model.learning_rate = cfg.learning_rate;
  model.base_score = y.mean();

  Eigen::VectorXd residual = y.array() - model.base_score;
  std::vector<std::size_t> all(static_cast<std::size_t>(X.rows()));
  std::iota(all.begin(), all.end(), 0);

  RegressionTree::FitConfig tree_cfg;
  tree_cfg.max_depth = cfg.max_depth;
  tree_cfg.min_samples_split = cfg.min_samples_split;

  for (int round = 0; round < cfg.rounds; ++round) {
    auto rng = make_rng(mix64(seed, 0x47424d31ULL, static_cast<std::uint64_t>(round)));
    RegressionTree tree = RegressionTree::fit(X, residual, all, tree_cfg, rng);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const auto row = X.row(i);
      residual(i) -= cfg.learning_rate *
                     tree.predict(std::span<const double>(row.data(), static_cast<std::size_t>(X.cols())));
    }
    model.trees.push_back(std::move(tree));
    if (residual.squaredNorm() < 1e-18) break;
  }
  return model;
}

double GradientBoostedTrees::predict(std::span<const double> x) const {
  double out = base_score;
  for (const auto& t : trees) out += learning_rate * t.predict(x);
  return out;
}

}  // namespace otune
