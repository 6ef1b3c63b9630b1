#include "otune/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "otune/errors.hpp"
#include "otune/meta.hpp"
#include "otune/rng.hpp"

namespace otune {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::string canonical_config_string(const Configuration& config) {
  std::string s;
  for (const auto& [name, value] : config.values) {
    s += name;
    s += '=';
    s += to_display_string(value);
    s += ';';
  }
  return s;
}
}  // namespace

ResourceFunctionSpec SyntheticJobSpec::resource_function() const {
  ResourceFunctionSpec fn;
  fn.coefficient = resource_coeff;
  fn.instances_param = instances_param;
  fn.cores_param = cores_param;
  fn.memory_param = memory_param;
  return fn;
}

MetaFeatureVector SyntheticJobSpec::meta_features() const {
  MetaFeatureVector v;
  v.schema_id = "sim12-v1";
  v.values = {static_cast<double>(stage_count),
              read_intensity,
              write_intensity,
              cpu_intensity,
              shuffle_coeff,
              parallel_fraction,
              alpha,
              mem_per_data / 32.0,
              skew,
              drift.amplitude,
              drift.period / 24.0,
              noise_sigma};
  return v;
}

double data_size_at(const SyntheticJobSpec& spec, int iteration) {
  if (spec.drift.kind == DriftSchedule::Kind::None || spec.drift.amplitude == 0.0) return 1.0;
  return 1.0 + spec.drift.amplitude *
                   std::sin(2.0 * kPi * static_cast<double>(iteration) / spec.drift.period);
}

SimResult simulate_execution(const SyntheticJobSpec& spec, const Configuration& config,
                             int iteration, bool with_noise) {
  const double ds = data_size_at(spec, iteration);
  const double instances = config.numeric(spec.instances_param);
  const double cores = spec.cores_param.empty() ? 1.0 : config.numeric(spec.cores_param);
  const double memory = spec.memory_param.empty() ? 0.0 : config.numeric(spec.memory_param);
  const double vcores = instances * cores;

  const double p = spec.parallel_fraction;
  const double parallel_term = (1.0 - p) + p / std::pow(vcores, 1.0 - spec.skew);
  const double shuffle_term = 1.0 + spec.shuffle_coeff * std::log1p(vcores);
  const double mem_needed = spec.mem_per_data * ds;
  const double total_mem = instances * memory;
  const double mem_penalty =
      mem_needed > 0.0
          ? 1.0 + spec.mem_penalty_coeff * std::max(0.0, mem_needed - total_mem) / mem_needed
          : 1.0;

  double noise = 1.0;
  if (with_noise && spec.noise_sigma > 0.0) {
    const std::uint64_t h =
        mix64(spec.seed, fnv1a(canonical_config_string(config)), static_cast<std::uint64_t>(iteration));
    auto rng = make_rng(h);
    std::normal_distribution<double> normal(0.0, 1.0);
    noise = std::exp(spec.noise_sigma * normal(rng));
  }

  SimResult out;
  out.data_size = ds;
  out.runtime = spec.base_work * std::pow(ds, spec.alpha) * parallel_term * shuffle_term *
                mem_penalty * noise;
  out.resource = spec.resource_function().value(config);
  out.metrics["runtime"] = out.runtime;
  out.metrics["resource"] = out.resource;
  out.meta_features = spec.meta_features();
  return out;
}

std::size_t Grid::cells() const {
  std::size_t n = 1;
  for (const auto& axis : axes) n *= axis.size();
  return n;
}

Configuration Grid::cell(std::size_t index, const ConfigurationSpace& space) const {
  if (axes.size() != space.dimension()) throw ShapeError("grid axes do not match space dimension");
  Configuration c;
  // Axis 0 is the most significant digit of the mixed-radix index.
  std::size_t remainder = index;
  for (std::size_t d = axes.size(); d-- > 0;) {
    const auto& axis = axes[d];
    const std::size_t pos = remainder % axis.size();
    remainder /= axis.size();
    c.values.emplace(space.param(d).name, axis[pos]);
  }
  return c;
}

BruteForceResult brute_force_optimum(const SyntheticJobSpec& spec, const Grid& grid,
                                     const ConfigurationSpace& space, double beta,
                                     const std::vector<ConstraintSpec>& constraints,
                                     int iteration) {
  const std::size_t total = grid.cells();
  if (total == 0) throw ArgumentError("empty grid");
  if (total > 1000000) throw ArgumentError("grid exceeds 10^6 cells");

  BruteForceResult result;
  result.total_cells = total;
  double best_feasible = std::numeric_limits<double>::infinity();
  double best_any = std::numeric_limits<double>::infinity();
  Configuration best_any_config;

  for (std::size_t i = 0; i < total; ++i) {
    const Configuration config = grid.cell(i, space);
    const SimResult sim = simulate_execution(spec, config, iteration, /*with_noise=*/false);
    const double f = objective_value(sim.runtime, sim.resource, beta);

    bool feasible = true;
    for (const auto& c : constraints) {
      const auto it = sim.metrics.find(c.metric);
      if (it == sim.metrics.end())
        throw SchemaError("oracle: unknown constraint metric '" + c.metric + "'", c.metric);
      if (it->second > c.threshold) {
        feasible = false;
        break;
      }
    }
    if (feasible) {
      ++result.feasible_cells;
      if (f < best_feasible) {
        best_feasible = f;
        result.best_config = config;
      }
    }
    if (f < best_any) {
      best_any = f;
      best_any_config = config;
    }
  }

  if (result.feasible_cells > 0) {
    result.feasible_found = true;
    result.best_objective = best_feasible;
  } else {
    result.feasible_found = false;
    result.best_config = best_any_config;
    result.best_objective = best_any;
  }
  return result;
}

std::string ToggleSet::label() const {
  std::string s;
  s += safety ? "safety:on" : "safety:off";
  s += agd ? "|agd:on" : "|agd:off";
  s += meta ? "|meta:on" : "|meta:off";
  switch (subspace) {
    case SubspaceMode::Adaptive: s += "|subspace:adaptive"; break;
    case SubspaceMode::Fixed: s += "|subspace:fixed"; break;
    case SubspaceMode::Full: s += "|subspace:full"; break;
  }
  return s;
}

std::vector<ConstraintSpec> resolve_constraints(const BenchmarkScenario& scenario,
                                                const SyntheticJobSpec& job) {
  std::vector<ConstraintSpec> out;
  for (const auto& sc : scenario.constraints) {
    ConstraintSpec spec;
    spec.name = sc.metric + "_max";
    spec.metric = sc.metric;
    if (std::isfinite(sc.max_value)) {
      spec.threshold = sc.max_value;
    } else if (std::isfinite(sc.max_x_default)) {
      const SimResult def = simulate_execution(job, scenario.space->default_configuration(), 0,
                                               /*with_noise=*/false);
      const auto it = def.metrics.find(sc.metric);
      if (it == def.metrics.end())
        throw SchemaError("constraint metric '" + sc.metric + "' unknown to simulator", sc.metric);
      spec.threshold = sc.max_x_default * it->second;
    } else {
      throw SchemaError("constraint needs either max or max_x_default", sc.metric);
    }
    out.push_back(std::move(spec));
  }
  return out;
}

namespace {

TuningTask make_task(const BenchmarkScenario& scenario, const SyntheticJobSpec& job,
                     const ToggleSet& toggles, std::uint64_t seed, int budget) {
  TuningTask task;
  task.task_id = job.family + "-" + std::to_string(seed);
  task.space = scenario.space;
  task.beta = scenario.beta;
  task.constraints = resolve_constraints(scenario, job);
  task.budget = budget;
  task.seed = seed;
  task.safety = scenario.safety;
  task.agd = scenario.agd;
  task.stopping = scenario.stopping;
  task.resource_fn = job.resource_function();
  task.context_mode = ContextMode::DataSize;
  task.meta_features = job.meta_features();
  task.safety_enabled = toggles.safety;
  task.agd_enabled = toggles.agd;
  task.meta_enabled = toggles.meta;
  task.subspace_mode = toggles.subspace;
  return task;
}

Engine run_engine_loop(const SyntheticJobSpec& job, const TuningTask& task,
                       std::shared_ptr<const MetaRepository> repo,
                       std::vector<IterationPoint>* trajectory) {
  Engine engine(task, std::move(repo));
  double best_feasible = std::numeric_limits<double>::infinity();
  for (int iteration = 1; iteration <= task.budget; ++iteration) {
    const Suggestion s = engine.suggest();
    const SimResult sim = simulate_execution(job, s.config, iteration);
    Measured m;
    m.runtime = sim.runtime;
    m.resource = sim.resource;
    m.metrics = sim.metrics;
    m.context.data_size = sim.data_size;
    m.meta_features = sim.meta_features;
    m.timestamp_ms = iteration;  // logical clock keeps reports reproducible
    const Observation& obs = engine.observe(s.config, m);

    if (trajectory) {
      IterationPoint pt;
      pt.iteration = iteration;
      pt.objective = obs.objective;
      pt.feasible = obs.feasible;
      if (obs.feasible) best_feasible = std::min(best_feasible, obs.objective);
      pt.best_feasible = best_feasible;
      pt.source = to_string(obs.source);
      trajectory->push_back(std::move(pt));
    }
  }
  return engine;
}

}  // namespace

RunResult run_single(const BenchmarkScenario& scenario, const SyntheticJobSpec& job,
                     const ToggleSet& toggles, std::uint64_t seed,
                     std::shared_ptr<const MetaRepository> repo) {
  RunResult result;
  result.job_family = job.family;
  result.toggles = toggles.label();
  result.seed = seed;

  const TuningTask task = make_task(scenario, job, toggles, seed, scenario.budget);
  run_engine_loop(job, task, toggles.meta ? repo : nullptr, &result.trajectory);

  std::size_t feasible_count = 0;
  for (const auto& pt : result.trajectory)
    if (pt.feasible) ++feasible_count;
  result.safe_ratio =
      static_cast<double>(feasible_count) / static_cast<double>(result.trajectory.size());
  result.final_incumbent = result.trajectory.back().best_feasible;

  const BruteForceResult oracle =
      brute_force_optimum(job, scenario.oracle_grid, *scenario.space, scenario.beta,
                          resolve_constraints(scenario, job), scenario.budget);
  result.oracle_objective = oracle.best_objective;
  result.final_gap = (result.final_incumbent - oracle.best_objective) / oracle.best_objective;
  for (const auto& pt : result.trajectory) {
    if (pt.best_feasible <= 1.1 * oracle.best_objective) {
      result.iterations_to_threshold = pt.iteration;
      break;
    }
  }
  return result;
}

std::shared_ptr<MetaRepository> build_meta_repository(const BenchmarkScenario& scenario) {
  auto repo = std::make_shared<MetaRepository>();
  if (scenario.meta_corpus.empty()) return repo;

  ToggleSet corpus_toggles;
  corpus_toggles.meta = false;
  for (const auto& entry : scenario.meta_corpus) {
    if (entry.job_index >= scenario.jobs.size())
      throw ArgumentError("meta corpus references unknown job index");
    const auto& job = scenario.jobs[entry.job_index];
    const TuningTask task =
        make_task(scenario, job, corpus_toggles, entry.seed, entry.budget);
    Engine engine = run_engine_loop(job, task, nullptr, nullptr);
    TaskRecord record =
        engine.make_archive_record(job.family + "#" + std::to_string(entry.seed));
    if (record.surrogate) repo->tasks.push_back(std::move(record));
  }

  if (repo->tasks.size() >= 3) {
    repo->distance_model = std::make_shared<DistanceModel>(train_distance_model(
        repo->tasks, scenario.probe_count, mix64(0x434f5250ULL, scenario.jobs.size())));
  }
  return repo;
}

BenchmarkReport run_benchmark(const BenchmarkScenario& scenario) {
  BenchmarkReport report;
  report.scenario_name = scenario.name;

  bool any_meta = false;
  for (const auto& t : scenario.toggle_sets) any_meta = any_meta || t.meta;
  std::shared_ptr<const MetaRepository> repo;
  if (any_meta) repo = build_meta_repository(scenario);

  for (const auto& job : scenario.jobs)
    for (const auto& toggles : scenario.toggle_sets)
      for (std::uint64_t seed : scenario.seeds)
        report.runs.push_back(run_single(scenario, job, toggles, seed, repo));
  return report;
}

std::string format_report_table(const BenchmarkReport& report) {
  struct Agg {
    double safe_ratio = 0.0;
    double gap = 0.0;
    double iters = 0.0;
    int iters_n = 0;
    int n = 0;
  };
  std::map<std::pair<std::string, std::string>, Agg> groups;
  for (const auto& run : report.runs) {
    Agg& agg = groups[{run.job_family, run.toggles}];
    agg.safe_ratio += run.safe_ratio;
    agg.gap += run.final_gap;
    if (run.iterations_to_threshold >= 0) {
      agg.iters += run.iterations_to_threshold;
      ++agg.iters_n;
    }
    ++agg.n;
  }

  std::size_t job_width = 8, toggle_width = 8;
  for (const auto& [key, _] : groups) {
    job_width = std::max(job_width, key.first.size());
    toggle_width = std::max(toggle_width, key.second.size());
  }

  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %-*s  %10s  %10s  %12s  %6s\n",
                static_cast<int>(job_width), "job", static_cast<int>(toggle_width), "toggles",
                "safe_ratio", "mean_gap", "iters_to_10%", "runs");
  out << "scenario: " << report.scenario_name << "\n" << line;
  for (const auto& [key, agg] : groups) {
    const double n = static_cast<double>(agg.n);
    std::snprintf(line, sizeof(line), "%-*s  %-*s  %10.4f  %10.4f  %12s  %6d\n",
                  static_cast<int>(job_width), key.first.c_str(), static_cast<int>(toggle_width),
                  key.second.c_str(), agg.safe_ratio / n, agg.gap / n,
                  agg.iters_n > 0
                      ? std::to_string(agg.iters / static_cast<double>(agg.iters_n)).substr(0, 6).c_str()
                      : "-",
                  agg.n);
    out << line;
  }
  return out.str();
}

}  // namespace otune
