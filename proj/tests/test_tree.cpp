#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "otune/rng.hpp"
#include "otune/tree.hpp"

using namespace otune;

namespace {

RowMatrix grid_2d(int per_axis) {
  RowMatrix X(per_axis * per_axis, 2);
  int row = 0;
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j) {
      X(row, 0) = (i + 0.5) / per_axis;
      X(row, 1) = (j + 0.5) / per_axis;
      ++row;
    }
  return X;
}

}  // namespace

TEST_CASE("a tree fits a step function exactly") {
  RowMatrix X(6, 1);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = (i + 0.5) / 6.0;
    y(i) = X(i, 0) < 0.5 ? 1.0 : 5.0;
  }
  std::vector<std::size_t> idx(6);
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(1);
  RegressionTree::FitConfig cfg;
  cfg.min_samples_split = 2;
  const RegressionTree tree = RegressionTree::fit(X, y, idx, cfg, rng);
  CHECK(tree.predict(std::vector<double>{0.2}) == doctest::Approx(1.0));
  CHECK(tree.predict(std::vector<double>{0.9}) == doctest::Approx(5.0));
}

TEST_CASE("leaf cells partition the unit box") {
  const RowMatrix X = grid_2d(8);
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) y(i) = std::sin(5 * X(i, 0)) + X(i, 1);
  std::vector<std::size_t> idx(static_cast<std::size_t>(X.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(2);
  const RegressionTree tree = RegressionTree::fit(X, y, idx, {}, rng);
  double volume = 0.0;
  for (const auto& leaf : tree.leaves(2))
    volume += (leaf.hi[0] - leaf.lo[0]) * (leaf.hi[1] - leaf.lo[1]);
  CHECK(volume == doctest::Approx(1.0));
}

TEST_CASE("forest fitting is deterministic per seed") {
  const RowMatrix X = grid_2d(6);
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) y(i) = X(i, 0) * X(i, 1);
  const RandomForest a = RandomForest::fit(X, y, 8, {}, 42);
  const RandomForest b = RandomForest::fit(X, y, 8, {}, 42);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> x{unit(rng), unit(rng)};
    CHECK(a.predict(x) == b.predict(x));
  }
}

TEST_CASE("gradient boosting drives the training error down") {
  const RowMatrix X = grid_2d(8);
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    y(i) = 2.0 * X(i, 0) - 1.5 * X(i, 1) + 0.5 * X(i, 0) * X(i, 1);

  GradientBoostedTrees::Config cfg;
  cfg.rounds = 100;
  const GradientBoostedTrees model = GradientBoostedTrees::fit(X, y, cfg, 7);
  double mae = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto row = X.row(i);
    mae += std::abs(model.predict(std::span<const double>(row.data(), 2)) - y(i));
  }
  mae /= static_cast<double>(X.rows());
  CHECK(mae < 0.02);
}
