#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "otune/engine.hpp"
#include "otune/space.hpp"

namespace otune {

struct DriftSchedule {
  enum class Kind { None, Sinusoid };
  Kind kind = Kind::None;
  double period = 24.0;     // iterations per cycle
  double amplitude = 0.0;   // relative data-size swing
};

/// Deterministic stand-in for a recurring Spark-like job.
struct SyntheticJobSpec {
  std::string family;
  double base_work = 100.0;        // abstract work units
  double parallel_fraction = 0.9;  // p in the Amdahl term
  double alpha = 1.0;              // data-size exponent
  double mem_per_data = 8.0;       // total GB needed at data size 1
  double mem_penalty_coeff = 4.0;  // kappa
  double shuffle_coeff = 0.0;      // runtime growth with total parallelism
  double skew = 0.0;               // straggler exponent in [0,1)
  double noise_sigma = 0.0;        // multiplicative lognormal noise
  DriftSchedule drift;
  double resource_coeff = 0.5;     // c in R = vcores + c * memory
  int stage_count = 1;
  double read_intensity = 0.5;
  double write_intensity = 0.5;
  double cpu_intensity = 0.5;
  std::uint64_t seed = 0;
  std::string instances_param = "instances";
  std::string cores_param = "cores";  // empty: single-core executors
  std::string memory_param = "memory";

  ResourceFunctionSpec resource_function() const;
  MetaFeatureVector meta_features() const;  // 12-feature simulator schema
};

double data_size_at(const SyntheticJobSpec& spec, int iteration);

struct SimResult {
  double runtime = 0.0;
  double resource = 0.0;
  std::map<std::string, double> metrics;
  MetaFeatureVector meta_features;
  double data_size = 1.0;
};

/// One simulated execution; bit-identical for identical
/// (spec.seed, config, iteration).
SimResult simulate_execution(const SyntheticJobSpec& spec, const Configuration& config,
                             int iteration, bool with_noise = true);

/// Cartesian grid over a space: one native value list per parameter, in
/// space order. Cell 0 is the first value of every axis; axis 0 is the
/// most significant digit of the cell index.
struct Grid {
  std::vector<std::vector<ParamValue>> axes;

  std::size_t cells() const;
  Configuration cell(std::size_t index, const ConfigurationSpace& space) const;
};

struct BruteForceResult {
  Configuration best_config;
  double best_objective = 0.0;
  bool feasible_found = false;  // false: best_config is the unconstrained minimizer
  std::size_t feasible_cells = 0;
  std::size_t total_cells = 0;
};

/// Noise-free exhaustive evaluation; ties broken by lowest cell index.
BruteForceResult brute_force_optimum(const SyntheticJobSpec& spec, const Grid& grid,
                                     const ConfigurationSpace& space, double beta,
                                     const std::vector<ConstraintSpec>& constraints,
                                     int iteration);

struct ToggleSet {
  bool safety = true;
  bool agd = true;
  bool meta = false;
  SubspaceMode subspace = SubspaceMode::Adaptive;

  std::string label() const;
};

/// Scenario constraint: absolute threshold, or a multiple of the default
/// configuration's noise-free metric (resolved at load).
struct ScenarioConstraint {
  std::string metric;
  double max_value = std::numeric_limits<double>::quiet_NaN();
  double max_x_default = std::numeric_limits<double>::quiet_NaN();
};

struct BenchmarkScenario {
  std::string name;
  std::shared_ptr<const ConfigurationSpace> space;
  std::vector<SyntheticJobSpec> jobs;
  double beta = 0.5;
  int budget = 30;
  std::vector<ScenarioConstraint> constraints;
  std::vector<std::uint64_t> seeds;
  std::vector<ToggleSet> toggle_sets;
  Grid oracle_grid;
  SafetyConfig safety;
  AGDConfig agd;
  StoppingConfig stopping;
  // Jobs pre-tuned (meta off) to populate the repository for meta-on runs.
  struct CorpusEntry {
    std::size_t job_index = 0;
    std::uint64_t seed = 0;
    int budget = 15;
  };
  std::vector<CorpusEntry> meta_corpus;
  std::size_t probe_count = 100;
};

struct IterationPoint {
  int iteration = 0;
  double objective = 0.0;
  double best_feasible = 0.0;  // +inf until a feasible observation exists
  bool feasible = false;
  std::string source;
};

struct RunResult {
  std::string job_family;
  std::string toggles;
  std::uint64_t seed = 0;
  std::vector<IterationPoint> trajectory;
  double safe_ratio = 0.0;
  double final_incumbent = 0.0;  // +inf when nothing feasible was found
  double oracle_objective = 0.0;
  double final_gap = 0.0;  // (incumbent - oracle) / oracle
  int iterations_to_threshold = -1;  // first iteration within 10% of oracle
};

struct BenchmarkReport {
  std::string scenario_name;
  std::vector<RunResult> runs;
};

/// Resolves thresholds for one job of the scenario.
std::vector<ConstraintSpec> resolve_constraints(const BenchmarkScenario& scenario,
                                                const SyntheticJobSpec& job);

/// Runs one tuning loop against the simulator and reports its trajectory.
RunResult run_single(const BenchmarkScenario& scenario, const SyntheticJobSpec& job,
                     const ToggleSet& toggles, std::uint64_t seed,
                     std::shared_ptr<const MetaRepository> repo = nullptr);

/// Builds the meta repository for a scenario by tuning the corpus entries
/// with meta-learning off and archiving the results.
std::shared_ptr<MetaRepository> build_meta_repository(const BenchmarkScenario& scenario);

/// Every job x toggle-set x seed combination, sequentially and
/// deterministically.
BenchmarkReport run_benchmark(const BenchmarkScenario& scenario);

/// Aligned-column summary, one row per (job, toggles) aggregate.
std::string format_report_table(const BenchmarkReport& report);

}  // namespace otune
