#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "otune/space.hpp"
#include "otune/surrogate.hpp"
#include "otune/tree.hpp"

namespace otune {

/// Workload characterization vector; one schema per repository.
struct MetaFeatureVector {
  std::string schema_id;
  std::vector<double> values;
};

/// Archived tuning task: features, best configurations, and a surrogate
/// snapshot rebuilt from its run history.
struct TaskRecord {
  std::string task_id;
  MetaFeatureVector features;
  std::vector<Configuration> best_configs;  // best feasible first
  std::shared_ptr<const GPModel> surrogate;
  std::string history_ref;
};

/// Tree-ensemble regressor mapping two feature vectors to a task distance
/// in [0,1]; symmetric by averaging both argument orders.
class DistanceModel {
 public:
  DistanceModel() = default;
  DistanceModel(GradientBoostedTrees model, std::string schema_id, std::size_t feature_dim,
                double holdout_mae)
      : model_(std::move(model)),
        schema_id_(std::move(schema_id)),
        feature_dim_(feature_dim),
        holdout_mae_(holdout_mae) {}

  double distance(const MetaFeatureVector& a, const MetaFeatureVector& b) const;
  double holdout_mae() const { return holdout_mae_; }
  const std::string& schema_id() const { return schema_id_; }
  std::size_t feature_dim() const { return feature_dim_; }
  const GradientBoostedTrees& tree_model() const { return model_; }

 private:
  GradientBoostedTrees model_;
  std::string schema_id_;
  std::size_t feature_dim_ = 0;
  double holdout_mae_ = 0.0;
};

/// Ratio of discordant prediction pairs: (1 - tau) / 2 with Kendall tau-a
/// over the two models' mean predictions on the probe set.
double surrogate_distance(const Surrogate& m1, const Surrogate& m2,
                          std::span<const std::vector<double>> probe_set);

/// Trains the task-distance regressor from all ordered pairs of archived
/// tasks (self pairs included with label 0), using a shared seeded probe
/// set of `probe_count` points.
DistanceModel train_distance_model(std::span<const TaskRecord> corpus, std::size_t probe_count,
                                   std::uint64_t seed);

/// Top-3 warm-start configurations: the best feasible configuration of each
/// of the three most similar archived tasks, deduplicated, padded with
/// low-discrepancy samples when the repository is small or empty.
std::vector<Configuration> warm_start(const MetaFeatureVector& new_task,
                                      std::span<const TaskRecord> repo, const DistanceModel& model,
                                      const ConfigurationSpace& space, std::uint64_t seed);

/// Base weights 1 - d_i plus the current-task weight, normalized to sum 1.
/// The returned vector has the current-task weight last.
std::vector<double> ensemble_weights(std::span<const double> distances, double current_task_weight);

/// Leave-one-out pair-ranking accuracy of a model on its own history,
/// used as the current-task ensemble weight.
double loo_rank_agreement(const GPModel& model);

}  // namespace otune
