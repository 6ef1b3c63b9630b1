#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "otune/acquisition.hpp"
#include "otune/agd.hpp"
#include "otune/meta.hpp"
#include "otune/space.hpp"
#include "otune/subspace.hpp"
#include "otune/surrogate.hpp"

namespace otune {

enum class TaskStatus { Initializing, Running, Stopped, Restarted };
enum class SuggestionSource { WarmStart, Bo, Agd, Fallback, Best };

std::string to_string(TaskStatus s);
std::string to_string(SuggestionSource s);

/// R(x) = instances * cores + c * instances * memory_GB. A parameter slot
/// left empty falls back to its constant.
struct ResourceFunctionSpec final : ResourceFunction {
  double coefficient = 0.5;  // memory-to-core weight c
  std::string instances_param = "instances";
  std::string cores_param = "cores";
  std::string memory_param = "memory";
  double cores_constant = 1.0;
  double memory_constant = 0.0;

  double value(const Configuration& config) const override;
  double partial(const Configuration& config, const std::string& param) const override;
};

struct StoppingConfig {
  double rho = 0.10;        // relative EI threshold
  int window = 3;           // consecutive low-EIC suggestions before stopping
  int min_observations = 5;
};

struct RestartConfig {
  int window = 5;      // consecutive degraded replays
  double margin = 0.20;
};

enum class ContextMode { None, DataSize, HourOfDay };
enum class SubspaceMode { Adaptive, Fixed, Full };

struct TuningTask {
  std::string task_id;
  std::shared_ptr<const ConfigurationSpace> space;
  double beta = 0.5;
  std::vector<ConstraintSpec> constraints;
  int budget = 20;
  std::uint64_t seed = 0;
  SafetyConfig safety;
  AGDConfig agd;
  StoppingConfig stopping;
  RestartConfig restart;
  ResourceFunctionSpec resource_fn;
  ContextMode context_mode = ContextMode::DataSize;
  MetaFeatureVector meta_features;  // optional; empty when unknown

  // Ablation toggles; all on in production use.
  bool safety_enabled = true;
  bool agd_enabled = true;
  bool meta_enabled = true;
  SubspaceMode subspace_mode = SubspaceMode::Adaptive;
};

struct ObservationContext {
  double data_size = 1.0;
  double hour = 0.0;
};

struct Observation {
  Configuration config;
  ObservationContext context;
  double runtime = 0.0;
  double resource = 0.0;
  double objective = 0.0;
  std::map<std::string, double> metrics;  // includes runtime/resource entries
  bool feasible = false;
  bool failed = false;  // crashed or non-finite metrics; objective holds +inf
  int iteration = 0;
  std::int64_t timestamp_ms = 0;
  SuggestionSource source = SuggestionSource::Bo;
  MetaFeatureVector meta_features;
  double eic = 0.0;     // acquisition value of the suggestion that produced this
  bool has_eic = false;
};

using RunHistory = std::vector<Observation>;

/// Execution results reported back for one suggested configuration.
struct Measured {
  double runtime = 0.0;
  double resource = 0.0;
  std::map<std::string, double> metrics;
  ObservationContext context;
  bool crashed = false;
  MetaFeatureVector meta_features;
  std::int64_t timestamp_ms = 0;
};

/// Generalized objective T^beta * R^(1-beta).
double objective_value(double t, double r, double beta);

/// Evaluates the analytic resource formula for a configuration.
double resource_usage(const Configuration& config, const ResourceFunctionSpec& spec);

struct Suggestion {
  Configuration config;
  SuggestionSource source = SuggestionSource::Bo;
  int iteration = 0;
  double eic = 0.0;
  bool has_eic = false;
};

struct MetaRepository {
  std::vector<TaskRecord> tasks;
  std::shared_ptr<const DistanceModel> distance_model;
};

/// Per-task tuning loop: warm start, BO/AGD alternation, sub-space
/// evolution, stopping and restarting. One logical writer per task.
class Engine {
 public:
  explicit Engine(TuningTask task, std::shared_ptr<const MetaRepository> repo = nullptr);

  const TuningTask& task() const { return task_; }
  const RunHistory& history() const { return history_; }
  TaskStatus status() const { return status_; }
  const SubSpaceState& subspace_state() const { return subspace_state_; }

  /// Next configuration to evaluate. Repeated calls without an intervening
  /// observe return the same suggestion; stopped tasks return the incumbent
  /// tagged Best.
  Suggestion suggest();

  /// Records execution results for a previously suggested configuration
  /// (or an explicitly imported one) and updates all tuning state. Imported
  /// records carry their original source tag and acquisition value so that
  /// replaying a log reconstructs identical state.
  struct ImportInfo {
    SuggestionSource source = SuggestionSource::Bo;
    double eic = 0.0;
    bool has_eic = false;
  };
  Observation observe(const Configuration& config, const Measured& measured,
                      const std::optional<ImportInfo>& import_info = std::nullopt);

  bool should_stop() const;
  bool should_restart() const;

  /// Suggestion awaiting its observation, if any.
  const std::optional<Suggestion>& outstanding() const { return outstanding_; }

  /// Re-enters the running state; the current history is archived into the
  /// engine's private repository so warm-starting can draw from it.
  void restart();

  /// Snapshot of the current history as a meta-repository record: features,
  /// up to three best feasible configurations, and a surrogate refit on the
  /// valid observations.
  TaskRecord make_archive_record(const std::string& record_id) const;

  const Observation* incumbent() const;      // best feasible
  const Observation* best_observation() const;  // best objective, any feasibility

  ImportanceReport current_importance() const;
  std::vector<ConstraintSpec> resolved_constraints() const { return constraints_; }

  /// Context features for the next run (last observed context).
  std::vector<double> upcoming_context() const;

 private:
  std::vector<double> context_features(const ObservationContext& ctx) const;
  KernelLayout make_layout() const;
  std::shared_ptr<GPModel> fit_metric_gp(const std::string& metric, std::uint64_t salt) const;
  std::shared_ptr<GPModel> fit_objective_gp() const;
  std::shared_ptr<Surrogate> objective_surrogate(std::shared_ptr<GPModel> current) const;
  double metric_value(const std::string& metric, const Observation& obs) const;
  std::vector<const Observation*> valid_observations() const;
  void refresh_importance();
  Configuration anchor_configuration() const;
  double y_best_value() const;
  std::vector<const TaskRecord*> repo_tasks_with_models() const;

  TuningTask task_;
  std::shared_ptr<const MetaRepository> repo_;
  RunHistory history_;
  std::vector<ConstraintSpec> constraints_;   // thresholds resolved
  TaskStatus status_ = TaskStatus::Initializing;
  SubSpaceState subspace_state_;
  std::optional<Suggestion> outstanding_;
  std::optional<ImportanceReport> importance_;
  std::size_t importance_at_count_ = 0;
  int low_eic_streak_ = 0;
  int degraded_replays_ = 0;
  std::optional<std::size_t> incumbent_idx_;
  std::optional<std::size_t> best_idx_;
  std::shared_ptr<const GPModel> stop_surrogate_;
  std::vector<TaskRecord> own_archive_;
  std::vector<Configuration> warm_start_cache_;
};

}  // namespace otune
