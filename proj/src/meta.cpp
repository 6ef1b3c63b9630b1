#include "otune/meta.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "otune/errors.hpp"
#include "otune/rng.hpp"
#include "otune/sampling.hpp"

namespace otune {

double DistanceModel::distance(const MetaFeatureVector& a, const MetaFeatureVector& b) const {
  if (a.values.size() != feature_dim_ || b.values.size() != feature_dim_)
    throw ShapeError("distance: feature dimension mismatch");
  std::vector<double> forward(a.values);
  forward.insert(forward.end(), b.values.begin(), b.values.end());
  std::vector<double> backward(b.values);
  backward.insert(backward.end(), a.values.begin(), a.values.end());
  const double d = 0.5 * (model_.predict(forward) + model_.predict(backward));
  return std::clamp(d, 0.0, 1.0);
}

double surrogate_distance(const Surrogate& m1, const Surrogate& m2,
                          std::span<const std::vector<double>> probe_set) {
  if (probe_set.size() < 2) throw ArgumentError("surrogate_distance needs a probe set of >= 2");
  const std::size_t n = probe_set.size();
  std::vector<double> p1(n), p2(n);
  for (std::size_t i = 0; i < n; ++i) {
    p1[i] = m1.predict(probe_set[i]).mean;
    p2[i] = m2.predict(probe_set[i]).mean;
  }
  // Kendall tau-a: tied pairs contribute 0 to the numerator.
  long long concordant_minus_discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s1 = p1[i] - p1[j];
      const double s2 = p2[i] - p2[j];
      if (s1 == 0.0 || s2 == 0.0) continue;
      concordant_minus_discordant += (s1 > 0) == (s2 > 0) ? 1 : -1;
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double tau = static_cast<double>(concordant_minus_discordant) / pairs;
  return (1.0 - tau) / 2.0;
}

DistanceModel train_distance_model(std::span<const TaskRecord> corpus, std::size_t probe_count,
                                   std::uint64_t seed) {
  std::size_t with_models = 0;
  for (const auto& task : corpus)
    if (task.surrogate && task.surrogate->fitted()) ++with_models;
  if (with_models < 3)
    throw StateError("train_distance_model needs at least 3 tasks with fitted surrogates");
  if (probe_count < 2) throw ArgumentError("probe_count must be >= 2");

  std::vector<const TaskRecord*> tasks;
  for (const auto& task : corpus)
    if (task.surrogate && task.surrogate->fitted()) tasks.push_back(&task);

  const std::string schema = tasks.front()->features.schema_id;
  const std::size_t feature_dim = tasks.front()->features.values.size();
  for (const auto* t : tasks) {
    if (t->features.schema_id != schema)
      throw SchemaError("meta-feature schema mismatch across repository");
    if (t->features.values.size() != feature_dim)
      throw ShapeError("meta-feature dimension mismatch across repository");
  }

  const std::size_t point_dim = tasks.front()->surrogate->layout().total();
  const auto probes = low_discrepancy_points(point_dim, probe_count, mix64(seed, 0x50524f42ULL));

  struct Pair {
    std::vector<double> features;
    double label;
  };
  std::vector<Pair> pairs;
  for (const auto* a : tasks) {
    for (const auto* b : tasks) {
      Pair p;
      p.features = a->features.values;
      p.features.insert(p.features.end(), b->features.values.begin(), b->features.values.end());
      p.label = a == b ? 0.0 : surrogate_distance(*a->surrogate, *b->surrogate, probes);
      pairs.push_back(std::move(p));
    }
  }

  auto rng = make_rng(mix64(seed, 0x4d455441ULL));
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t holdout = std::max<std::size_t>(1, pairs.size() / 5);

  auto build_matrix = [&](std::span<const std::size_t> idx, RowMatrix& X, Eigen::VectorXd& y) {
    X.resize(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(2 * feature_dim));
    y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t c = 0; c < 2 * feature_dim; ++c)
        X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = pairs[idx[r]].features[c];
      y(static_cast<Eigen::Index>(r)) = pairs[idx[r]].label;
    }
  };

  GradientBoostedTrees::Config cfg;
  const std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(holdout));
  const std::vector<std::size_t> test_idx(order.end() - static_cast<std::ptrdiff_t>(holdout), order.end());

  RowMatrix X_train;
  Eigen::VectorXd y_train;
  build_matrix(train_idx, X_train, y_train);
  const GradientBoostedTrees probe_model = GradientBoostedTrees::fit(X_train, y_train, cfg, seed);

  double mae = 0.0;
  for (std::size_t i : test_idx) {
    const double pred = std::clamp(probe_model.predict(pairs[i].features), 0.0, 1.0);
    mae += std::abs(pred - pairs[i].label);
  }
  mae /= static_cast<double>(test_idx.size());

  // Final model uses every pair; the held-out MAE stays as metadata.
  std::vector<std::size_t> all_idx(pairs.size());
  std::iota(all_idx.begin(), all_idx.end(), 0);
  RowMatrix X_all;
  Eigen::VectorXd y_all;
  build_matrix(all_idx, X_all, y_all);
  GradientBoostedTrees final_model = GradientBoostedTrees::fit(X_all, y_all, cfg, seed);

  return DistanceModel(std::move(final_model), schema, feature_dim, mae);
}

std::vector<Configuration> warm_start(const MetaFeatureVector& new_task,
                                      std::span<const TaskRecord> repo, const DistanceModel& model,
                                      const ConfigurationSpace& space, std::uint64_t seed) {
  constexpr std::size_t kCount = 3;
  std::vector<Configuration> out;

  auto add_distinct = [&](const Configuration& c) {
    for (const auto& existing : out)
      if (existing == c) return false;
    out.push_back(c);
    return true;
  };

  if (!repo.empty()) {
    std::vector<std::size_t> order(repo.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> dist(repo.size());
    for (std::size_t i = 0; i < repo.size(); ++i)
      dist[i] = model.distance(new_task, repo[i].features);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (dist[a] != dist[b]) return dist[a] < dist[b];
      return repo[a].task_id < repo[b].task_id;
    });
    // Best configuration of each similar task; duplicates are replaced from
    // the next-ranked task's list.
    for (std::size_t rank = 0; rank < order.size() && out.size() < kCount; ++rank) {
      for (const auto& config : repo[order[rank]].best_configs) {
        if (add_distinct(config)) break;
      }
    }
  }

  HaltonSampler sampler(space.dimension(), mix64(seed, 0x57415253ULL));
  while (out.size() < kCount) {
    const Configuration c = denormalize(sampler.next(), space);
    add_distinct(c);
  }
  return out;
}

std::vector<double> ensemble_weights(std::span<const double> distances,
                                     double current_task_weight) {
  for (double d : distances)
    if (!(d >= 0.0 && d <= 1.0)) throw ArgumentError("task distance outside [0,1]");
  if (!(current_task_weight >= 0.0 && current_task_weight <= 1.0))
    throw ArgumentError("current-task weight outside [0,1]");

  std::vector<double> weights;
  weights.reserve(distances.size() + 1);
  for (double d : distances) weights.push_back(1.0 - d);
  weights.push_back(current_task_weight);

  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (sum <= 0.0) {
    // Degenerate: nothing carries signal; spread evenly.
    std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(weights.size()));
    return weights;
  }
  for (double& w : weights) w /= sum;
  return weights;
}

double loo_rank_agreement(const GPModel& model) {
  if (!model.fitted()) throw StateError("loo_rank_agreement on unfitted model");
  if (model.num_points() < 2) return 0.0;
  const Eigen::VectorXd loo = model.loo_means();
  const Eigen::VectorXd& y = model.raw_targets();
  const auto n = static_cast<std::size_t>(y.size());
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dy = y(static_cast<Eigen::Index>(i)) - y(static_cast<Eigen::Index>(j));
      if (dy == 0.0) continue;
      const double dp = loo(static_cast<Eigen::Index>(i)) - loo(static_cast<Eigen::Index>(j));
      ++total;
      if (dp * dy > 0.0) ++correct;
    }
  }
  if (total == 0) return 0.0;
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace otune
