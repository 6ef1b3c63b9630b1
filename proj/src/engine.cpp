#include "otune/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "otune/errors.hpp"
#include "otune/rng.hpp"
#include "otune/sampling.hpp"

namespace otune {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr std::size_t kHistoryCap = 500;  // surrogate fitting window
}  // namespace

std::string to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::Initializing: return "initializing";
    case TaskStatus::Running: return "running";
    case TaskStatus::Stopped: return "stopped";
    case TaskStatus::Restarted: return "restarted";
  }
  return "unknown";
}

std::string to_string(SuggestionSource s) {
  switch (s) {
    case SuggestionSource::WarmStart: return "warm_start";
    case SuggestionSource::Bo: return "bo";
    case SuggestionSource::Agd: return "agd";
    case SuggestionSource::Fallback: return "fallback";
    case SuggestionSource::Best: return "best";
  }
  return "unknown";
}

double ResourceFunctionSpec::value(const Configuration& config) const {
  const double instances = config.numeric(instances_param);
  const double cores = cores_param.empty() ? cores_constant : config.numeric(cores_param);
  const double memory = memory_param.empty() ? memory_constant : config.numeric(memory_param);
  return instances * cores + coefficient * instances * memory;
}

double ResourceFunctionSpec::partial(const Configuration& config, const std::string& param) const {
  const double instances = config.numeric(instances_param);
  const double cores = cores_param.empty() ? cores_constant : config.numeric(cores_param);
  const double memory = memory_param.empty() ? memory_constant : config.numeric(memory_param);
  if (param == instances_param) return cores + coefficient * memory;
  if (!cores_param.empty() && param == cores_param) return instances;
  if (!memory_param.empty() && param == memory_param) return coefficient * instances;
  return 0.0;
}

double objective_value(double t, double r, double beta) {
  if (!(t > 0.0) || !(r > 0.0))
    throw DomainError("objective_value requires positive runtime and resource");
  if (beta == 1.0) return t;
  if (beta == 0.0) return r;
  return std::pow(t, beta) * std::pow(r, 1.0 - beta);
}

double resource_usage(const Configuration& config, const ResourceFunctionSpec& spec) {
  return spec.value(config);
}

Engine::Engine(TuningTask task, std::shared_ptr<const MetaRepository> repo)
    : task_(std::move(task)), repo_(std::move(repo)) {
  if (!task_.space) throw ArgumentError("task requires a configuration space");
  if (!(task_.beta >= 0.0 && task_.beta <= 1.0)) throw DomainError("beta must lie in [0,1]");
  if (task_.budget < 1) throw ArgumentError("budget must be >= 1");
  if (!(task_.safety.gamma > 0.0 && task_.safety.gamma <= 1.0))
    throw DomainError("gamma must lie in (0,1]");
  constraints_ = task_.constraints;
  subspace_state_ = SubSpaceState::initial(task_.space->dimension());
  subspace_state_.ranking = task_.space->expert_ranking();
}

std::vector<double> Engine::context_features(const ObservationContext& ctx) const {
  switch (task_.context_mode) {
    case ContextMode::None: return {};
    case ContextMode::DataSize: return {ctx.data_size};
    case ContextMode::HourOfDay: {
      const double angle = 2.0 * kPi * ctx.hour / 24.0;
      return {0.5 * (std::sin(angle) + 1.0), 0.5 * (std::cos(angle) + 1.0)};
    }
  }
  return {};
}

KernelLayout Engine::make_layout() const {
  KernelLayout layout;
  const auto& space = *task_.space;
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    if (space.param(i).is_numeric())
      layout.numeric_dims.push_back(i);
    else
      layout.categorical_dims.push_back(i);
  }
  const std::size_t n_ctx = context_features(ObservationContext{}).size();
  for (std::size_t i = 0; i < n_ctx; ++i) layout.context_dims.push_back(space.dimension() + i);
  return layout;
}

std::vector<const Observation*> Engine::valid_observations() const {
  std::vector<const Observation*> out;
  for (const auto& obs : history_)
    if (!obs.failed) out.push_back(&obs);
  if (out.size() > kHistoryCap) out.erase(out.begin(), out.end() - kHistoryCap);
  return out;
}

double Engine::metric_value(const std::string& metric, const Observation& obs) const {
  if (metric == "runtime") return obs.runtime;
  if (metric == "resource") return obs.resource;
  auto it = obs.metrics.find(metric);
  if (it == obs.metrics.end())
    throw SchemaError("observation missing metric '" + metric + "'", metric);
  return it->second;
}

std::shared_ptr<GPModel> Engine::fit_metric_gp(const std::string& metric,
                                               std::uint64_t salt) const {
  const auto valid = valid_observations();
  if (valid.empty()) throw StateError("no valid observations to fit on");
  const KernelLayout layout = make_layout();
  RowMatrix X(static_cast<Eigen::Index>(valid.size()), static_cast<Eigen::Index>(layout.total()));
  Eigen::VectorXd y(static_cast<Eigen::Index>(valid.size()));
  for (std::size_t i = 0; i < valid.size(); ++i) {
    std::vector<double> row = normalize(valid[i]->config, *task_.space);
    const auto ctx = context_features(valid[i]->context);
    row.insert(row.end(), ctx.begin(), ctx.end());
    for (std::size_t j = 0; j < row.size(); ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    y(static_cast<Eigen::Index>(i)) =
        metric == "__objective__" ? valid[i]->objective : metric_value(metric, *valid[i]);
  }
  FitOptions options;
  options.seed = mix64(task_.seed, fnv1a(metric), salt);
  if (valid.size() > 100) {
    options.restarts = 3;
    options.local_steps = 30;
  }
  return std::make_shared<GPModel>(GPModel::fit(X, y, layout, options));
}

std::shared_ptr<GPModel> Engine::fit_objective_gp() const { return fit_metric_gp("__objective__", 1); }

std::vector<const TaskRecord*> Engine::repo_tasks_with_models() const {
  std::vector<const TaskRecord*> tasks;
  if (repo_) {
    for (const auto& t : repo_->tasks)
      if (t.surrogate && t.surrogate->fitted()) tasks.push_back(&t);
  }
  for (const auto& t : own_archive_)
    if (t.surrogate && t.surrogate->fitted()) tasks.push_back(&t);
  return tasks;
}

std::shared_ptr<Surrogate> Engine::objective_surrogate(std::shared_ptr<GPModel> current) const {
  if (!task_.meta_enabled) return current;
  const auto tasks = repo_tasks_with_models();
  if (tasks.empty()) return current;

  // Locate the current task's meta features: task definition first, then the
  // most recent observation that carried them.
  const MetaFeatureVector* features = nullptr;
  if (!task_.meta_features.values.empty()) features = &task_.meta_features;
  for (auto it = history_.rbegin(); it != history_.rend() && !features; ++it)
    if (!it->meta_features.values.empty()) features = &it->meta_features;
  if (!features) return current;

  std::shared_ptr<const DistanceModel> model = repo_ ? repo_->distance_model : nullptr;
  if (!model) return current;

  std::vector<std::shared_ptr<const GPModel>> models;
  std::vector<double> distances;
  for (const auto* t : tasks) {
    if (t->features.schema_id != features->schema_id ||
        t->features.values.size() != features->values.size())
      continue;
    if (t->surrogate->layout().total() != current->layout().total()) continue;
    models.push_back(t->surrogate);
    distances.push_back(model->distance(*features, t->features));
  }
  if (models.empty()) return current;

  const double current_weight = loo_rank_agreement(*current);
  const std::vector<double> weights = ensemble_weights(distances, current_weight);
  models.push_back(std::move(current));
  return std::make_shared<EnsembleSurrogate>(std::move(models), weights);
}

void Engine::refresh_importance() {
  // Importance is recomputed every 5 valid observations. Anchoring the
  // refresh points to the history prefix keeps a replayed engine identical
  // to the live one regardless of when suggest() was called.
  const auto valid = valid_observations();
  if (valid.size() < 10) return;
  const std::size_t refresh_count = valid.size() - valid.size() % 5;
  if (refresh_count < 10) return;
  if (importance_ && importance_at_count_ == refresh_count) return;
  std::vector<Configuration> configs;
  std::vector<double> objectives;
  configs.reserve(refresh_count);
  for (std::size_t i = 0; i < refresh_count; ++i) {
    configs.push_back(valid[i]->config);
    objectives.push_back(valid[i]->objective);
  }
  importance_ = importance_scores(configs, objectives, *task_.space,
                                  mix64(task_.seed, 0x494d50ULL, refresh_count));
  importance_at_count_ = refresh_count;
  subspace_state_.ranking = importance_->ranking();
}

Configuration Engine::anchor_configuration() const {
  if (incumbent_idx_) return history_[*incumbent_idx_].config;
  if (best_idx_) return history_[*best_idx_].config;
  return task_.space->default_configuration();
}

double Engine::y_best_value() const {
  if (incumbent_idx_) return history_[*incumbent_idx_].objective;
  if (best_idx_) return history_[*best_idx_].objective;
  throw StateError("no observations yet");
}

std::vector<double> Engine::upcoming_context() const {
  // Failed runs still observed the workload, so any last context counts.
  if (!history_.empty()) return context_features(history_.back().context);
  return context_features(ObservationContext{});
}

ImportanceReport Engine::current_importance() const {
  if (importance_) return *importance_;
  const auto valid = valid_observations();
  std::vector<Configuration> configs;
  std::vector<double> objectives;
  for (const auto* obs : valid) {
    configs.push_back(obs->config);
    objectives.push_back(obs->objective);
  }
  return importance_scores(configs, objectives, *task_.space, mix64(task_.seed, 0x494d50ULL));
}

Suggestion Engine::suggest() {
  if (status_ == TaskStatus::Initializing || status_ == TaskStatus::Restarted)
    status_ = TaskStatus::Running;

  if (status_ == TaskStatus::Stopped) {
    const Observation* best = incumbent() ? incumbent() : best_observation();
    if (!best) throw StateError("stopped task has no observations");
    Suggestion s;
    s.config = best->config;
    s.source = SuggestionSource::Best;
    s.iteration = static_cast<int>(history_.size()) + 1;
    return s;
  }

  if (outstanding_) return *outstanding_;

  const int iteration = static_cast<int>(history_.size()) + 1;
  Suggestion s;
  s.iteration = iteration;

  const auto valid = valid_observations();

  if (iteration <= 3) {
    if (warm_start_cache_.empty()) {
      const auto repo_tasks = repo_tasks_with_models();
      const bool meta_available = task_.meta_enabled && !repo_tasks.empty() && repo_ &&
                                  repo_->distance_model && !task_.meta_features.values.empty();
      if (meta_available) {
        std::vector<TaskRecord> records;
        for (const auto* t : repo_tasks) records.push_back(*t);
        warm_start_cache_ = warm_start(task_.meta_features, records, *repo_->distance_model,
                                       *task_.space, mix64(task_.seed, 0x5753ULL));
      } else if (task_.meta_enabled && !own_archive_.empty()) {
        // Restart path: reuse the task's own archived best configurations.
        for (const auto& rec : own_archive_)
          for (const auto& c : rec.best_configs) {
            if (warm_start_cache_.size() >= 3) break;
            if (std::find(warm_start_cache_.begin(), warm_start_cache_.end(), c) ==
                warm_start_cache_.end())
              warm_start_cache_.push_back(c);
          }
      }
      if (warm_start_cache_.size() < 3) {
        HaltonSampler sampler(task_.space->dimension(), mix64(task_.seed, 0x494e4954ULL));
        while (warm_start_cache_.size() < 3) {
          Configuration c = denormalize(sampler.next(), *task_.space);
          if (std::find(warm_start_cache_.begin(), warm_start_cache_.end(), c) ==
              warm_start_cache_.end())
            warm_start_cache_.push_back(std::move(c));
        }
      }
    }
    s.config = warm_start_cache_[static_cast<std::size_t>(iteration - 1)];
    s.source = SuggestionSource::WarmStart;
    outstanding_ = s;
    return s;
  }

  if (valid.empty()) {
    // Every evaluation so far failed; keep probing the space.
    auto samples = sample_low_discrepancy(*task_.space, static_cast<std::size_t>(iteration),
                                          mix64(task_.seed, 0x494e4954ULL, 2));
    s.config = samples.back();
    s.source = SuggestionSource::WarmStart;
    outstanding_ = s;
    return s;
  }

  if (task_.agd_enabled && task_.agd.period >= 2 && iteration % task_.agd.period == 0) {
    const auto runtime_gp = fit_metric_gp("runtime", 2);
    const Configuration base = anchor_configuration();
    const auto context = upcoming_context();
    s.config = agd_step(base, *runtime_gp, task_.resource_fn, task_.beta, task_.agd,
                        *task_.space, context);
    s.source = SuggestionSource::Agd;
    outstanding_ = s;
    return s;
  }

  // BO path: surrogates, sub-space, safe region, EIC.
  refresh_importance();

  std::size_t k = 0;
  switch (task_.subspace_mode) {
    case SubspaceMode::Adaptive: k = static_cast<std::size_t>(subspace_state_.k); break;
    case SubspaceMode::Fixed: k = static_cast<std::size_t>(subspace_state_.k_init); break;
    case SubspaceMode::Full: k = task_.space->dimension(); break;
  }
  k = std::min(k, task_.space->dimension());

  SubSpace region;
  region.anchor = anchor_configuration();
  const auto& ranking = subspace_state_.ranking;
  region.member_names.assign(ranking.begin(),
                             ranking.begin() + static_cast<std::ptrdiff_t>(k));

  auto current_gp = fit_objective_gp();
  auto objective = objective_surrogate(current_gp);

  std::vector<std::shared_ptr<GPModel>> constraint_gps;
  std::vector<ConstraintModel> constraint_models;
  for (std::size_t c = 0; c < constraints_.size(); ++c) {
    if (!std::isfinite(constraints_[c].threshold)) continue;  // not resolved yet
    constraint_gps.push_back(fit_metric_gp(constraints_[c].metric, 3 + c));
    constraint_models.push_back({constraint_gps.back().get(), constraints_[c]});
  }

  AcquisitionOptions options;
  options.safety_enabled = task_.safety_enabled;
  options.use_feasibility = task_.safety_enabled;

  const auto context = upcoming_context();
  const double y_best = y_best_value();
  const AcquisitionResult result =
      maximize_eic(*objective, constraint_models, region, *task_.space, context, task_.safety,
                   y_best, mix64(task_.seed, 0x454943ULL, static_cast<std::uint64_t>(iteration)),
                   options);

  s.config = result.config;
  s.source = result.fallback ? SuggestionSource::Fallback : SuggestionSource::Bo;
  s.eic = result.eic;
  s.has_eic = true;
  outstanding_ = s;
  return s;
}

Observation Engine::observe(const Configuration& config, const Measured& measured,
                            const std::optional<ImportInfo>& import_info) {
  const bool imported = import_info.has_value();
  if (!imported) {
    if (status_ == TaskStatus::Stopped) {
      const Observation* best = incumbent() ? incumbent() : best_observation();
      if (!best || !(best->config == config))
        throw StateError("stopped task only accepts replays of the best configuration");
    } else {
      if (!outstanding_) throw StateError("observe without an outstanding suggestion");
      if (!(outstanding_->config == config))
        throw StateError("observed configuration does not match the outstanding suggestion");
    }
  }
  task_.space->validate(config);
  if (status_ == TaskStatus::Initializing || status_ == TaskStatus::Restarted)
    status_ = TaskStatus::Running;

  Observation obs;
  obs.config = config;
  obs.context = measured.context;
  obs.runtime = measured.runtime;
  obs.resource = measured.resource;
  obs.metrics = measured.metrics;
  obs.metrics["runtime"] = measured.runtime;
  obs.metrics["resource"] = measured.resource;
  obs.timestamp_ms = measured.timestamp_ms;
  obs.meta_features = measured.meta_features;
  obs.iteration = static_cast<int>(history_.size()) + 1;
  if (imported) {
    obs.source = import_info->source;
    obs.eic = import_info->eic;
    obs.has_eic = import_info->has_eic;
  } else if (outstanding_) {
    obs.source = outstanding_->source;
    obs.eic = outstanding_->eic;
    obs.has_eic = outstanding_->has_eic;
  } else {
    obs.source = SuggestionSource::Best;  // replay of the incumbent after stop
  }

  const bool bad_metrics = measured.crashed || !std::isfinite(measured.runtime) ||
                           !std::isfinite(measured.resource) || measured.runtime <= 0.0 ||
                           measured.resource <= 0.0;
  if (bad_metrics) {
    obs.failed = true;
    obs.feasible = false;
    obs.objective = std::numeric_limits<double>::infinity();
  } else {
    obs.objective = objective_value(measured.runtime, measured.resource, task_.beta);
    // Default thresholds resolve to twice the first valid observation's metrics.
    const bool first_valid = valid_observations().empty();
    if (first_valid) {
      for (auto& c : constraints_)
        if (!std::isfinite(c.threshold)) c.threshold = 2.0 * metric_value(c.metric, obs);
    }
    obs.feasible = true;
    for (const auto& c : constraints_) {
      if (!std::isfinite(c.threshold)) continue;
      if (metric_value(c.metric, obs) > c.threshold) {
        obs.feasible = false;
        break;
      }
    }
  }

  const bool improved =
      obs.feasible &&
      (!incumbent_idx_ || obs.objective < history_[*incumbent_idx_].objective);

  // Low-EIC streak for the stopping rule; y_best is unchanged between the
  // suggestion and this observe, so the comparison matches suggest time.
  if (obs.has_eic && status_ != TaskStatus::Stopped) {
    double y_ref = 0.0;
    if (incumbent_idx_)
      y_ref = history_[*incumbent_idx_].objective;
    else if (best_idx_)
      y_ref = history_[*best_idx_].objective;
    if (obs.eic < task_.stopping.rho * std::abs(y_ref))
      ++low_eic_streak_;
    else
      low_eic_streak_ = 0;
  }

  history_.push_back(std::move(obs));
  const std::size_t idx = history_.size() - 1;
  const Observation& stored = history_[idx];

  if (!stored.failed) {
    if (!best_idx_ || stored.objective < history_[*best_idx_].objective) best_idx_ = idx;
    if (improved) incumbent_idx_ = idx;
  }
  outstanding_.reset();

  const Observation result = stored;  // restart() below may clear the history

  if (status_ == TaskStatus::Stopped) {
    // Replay monitoring: compare against the surrogate frozen at stop time.
    if (stop_surrogate_ && incumbent_idx_ && !result.failed) {
      std::vector<double> point = normalize(history_[*incumbent_idx_].config, *task_.space);
      const auto ctx = context_features(result.context);
      point.insert(point.end(), ctx.begin(), ctx.end());
      const double expected = stop_surrogate_->predict(point).mean;
      if (expected > 0.0 && result.objective > (1.0 + task_.restart.margin) * expected)
        ++degraded_replays_;
      else
        degraded_replays_ = 0;
    }
    if (should_restart()) restart();
    return result;
  }

  subspace_state_ = update_size(subspace_state_, improved);

  if (should_stop()) {
    status_ = TaskStatus::Stopped;
    try {
      stop_surrogate_ = fit_objective_gp();
    } catch (const Error&) {
      stop_surrogate_ = nullptr;  // nothing valid to fit on
    }
    degraded_replays_ = 0;
  }
  return result;
}

bool Engine::should_stop() const {
  if (status_ == TaskStatus::Stopped) return true;
  if (history_.size() < static_cast<std::size_t>(task_.stopping.min_observations)) return false;
  if (history_.size() >= static_cast<std::size_t>(task_.budget)) return true;
  return low_eic_streak_ >= task_.stopping.window;
}

bool Engine::should_restart() const {
  if (status_ != TaskStatus::Stopped) return false;
  return degraded_replays_ >= task_.restart.window;
}

TaskRecord Engine::make_archive_record(const std::string& record_id) const {
  TaskRecord record;
  record.task_id = record_id;
  record.features = task_.meta_features;
  for (auto it = history_.rbegin(); it != history_.rend(); ++it)
    if (!it->meta_features.values.empty()) {
      record.features = it->meta_features;
      break;
    }

  // Best feasible configurations, best first.
  std::vector<const Observation*> feasible;
  for (const auto& obs : history_)
    if (obs.feasible) feasible.push_back(&obs);
  std::stable_sort(feasible.begin(), feasible.end(),
                   [](const Observation* a, const Observation* b) {
                     return a->objective < b->objective;
                   });
  for (const auto* obs : feasible) {
    if (record.best_configs.size() >= 3) break;
    if (std::find(record.best_configs.begin(), record.best_configs.end(), obs->config) ==
        record.best_configs.end())
      record.best_configs.push_back(obs->config);
  }
  try {
    record.surrogate = fit_objective_gp();
  } catch (const Error&) {
    record.surrogate = nullptr;
  }
  return record;
}

void Engine::restart() {
  if (status_ != TaskStatus::Stopped) throw StateError("restart requires a stopped task");

  TaskRecord record =
      make_archive_record(task_.task_id + "@archive" + std::to_string(own_archive_.size() + 1));
  if (!record.best_configs.empty() || record.surrogate) own_archive_.push_back(std::move(record));

  history_.clear();
  constraints_ = task_.constraints;
  subspace_state_ = SubSpaceState::initial(task_.space->dimension());
  subspace_state_.ranking = task_.space->expert_ranking();
  outstanding_.reset();
  importance_.reset();
  importance_at_count_ = 0;
  low_eic_streak_ = 0;
  degraded_replays_ = 0;
  incumbent_idx_.reset();
  best_idx_.reset();
  stop_surrogate_ = nullptr;
  warm_start_cache_.clear();
  status_ = TaskStatus::Restarted;
}

const Observation* Engine::incumbent() const {
  return incumbent_idx_ ? &history_[*incumbent_idx_] : nullptr;
}

const Observation* Engine::best_observation() const {
  return best_idx_ ? &history_[*best_idx_] : nullptr;
}

}  // namespace otune
