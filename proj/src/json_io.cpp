#include "otune/json_io.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "otune/errors.hpp"

namespace otune {

namespace {

void expect_fields(const Json& doc, const std::set<std::string>& allowed,
                   const std::string& where) {
  if (!doc.is_object()) throw SchemaError(where + ": expected an object", where);
  for (const auto& [key, _] : doc.items())
    if (!allowed.count(key)) throw SchemaError(where + ": unknown field '" + key + "'", key);
}

double require_number(const Json& doc, const std::string& field, const std::string& where) {
  if (!doc.contains(field) || !doc[field].is_number())
    throw SchemaError(where + ": missing numeric field '" + field + "'", field);
  return doc[field].get<double>();
}

std::string require_string(const Json& doc, const std::string& field, const std::string& where) {
  if (!doc.contains(field) || !doc[field].is_string())
    throw SchemaError(where + ": missing string field '" + field + "'", field);
  return doc[field].get<std::string>();
}

SuggestionSource source_from_string(const std::string& s) {
  if (s == "warm_start") return SuggestionSource::WarmStart;
  if (s == "bo") return SuggestionSource::Bo;
  if (s == "agd") return SuggestionSource::Agd;
  if (s == "fallback") return SuggestionSource::Fallback;
  if (s == "best") return SuggestionSource::Best;
  throw SchemaError("unknown suggestion source '" + s + "'", "source");
}

Json meta_features_to_json(const MetaFeatureVector& v) {
  Json doc;
  doc["schema_id"] = v.schema_id;
  doc["values"] = v.values;
  return doc;
}

MetaFeatureVector meta_features_from_json(const Json& doc) {
  MetaFeatureVector v;
  v.schema_id = require_string(doc, "schema_id", "meta_features");
  if (!doc.contains("values") || !doc["values"].is_array())
    throw SchemaError("meta_features: missing values array", "values");
  for (const auto& x : doc["values"]) v.values.push_back(x.get<double>());
  return v;
}

}  // namespace

Json value_to_json(const ParamValue& value) {
  if (std::holds_alternative<double>(value)) return std::get<double>(value);
  return std::get<std::string>(value);
}

ParamValue value_from_json(const Json& doc) {
  if (doc.is_number()) return doc.get<double>();
  if (doc.is_string()) return doc.get<std::string>();
  throw SchemaError("parameter value must be a number or string");
}

Json space_to_json(const ConfigurationSpace& space) {
  Json params = Json::array();
  for (const auto& p : space.params()) {
    Json entry;
    entry["name"] = p.name;
    switch (p.kind) {
      case ParamKind::Integer: entry["kind"] = "integer"; break;
      case ParamKind::Real: entry["kind"] = "real"; break;
      case ParamKind::Categorical: entry["kind"] = "categorical"; break;
    }
    if (p.kind == ParamKind::Categorical) {
      entry["choices"] = p.choices;
    } else {
      entry["range"] = Json::array({p.low, p.high});
      if (p.log_scale) entry["log_scale"] = true;
    }
    entry["default"] = value_to_json(p.default_value);
    params.push_back(std::move(entry));
  }
  Json doc;
  doc["parameters"] = std::move(params);
  doc["expert_ranking"] = space.expert_ranking();
  return doc;
}

std::shared_ptr<ConfigurationSpace> space_from_json(const Json& doc) {
  expect_fields(doc, {"parameters", "expert_ranking"}, "space");
  if (!doc.contains("parameters") || !doc["parameters"].is_array())
    throw SchemaError("space: missing parameters array", "parameters");

  std::vector<ParameterDef> defs;
  for (const auto& entry : doc["parameters"]) {
    expect_fields(entry, {"name", "kind", "range", "choices", "log_scale", "default"},
                  "space.parameters");
    ParameterDef def;
    def.name = require_string(entry, "name", "parameter");
    const std::string kind = require_string(entry, "kind", "parameter");
    if (kind == "integer")
      def.kind = ParamKind::Integer;
    else if (kind == "real")
      def.kind = ParamKind::Real;
    else if (kind == "categorical")
      def.kind = ParamKind::Categorical;
    else
      throw SchemaError("parameter '" + def.name + "': unknown kind '" + kind + "'", "kind");

    if (def.kind == ParamKind::Categorical) {
      if (entry.contains("range"))
        throw SchemaError("parameter '" + def.name + "': categorical takes choices, not range");
      if (!entry.contains("choices") || !entry["choices"].is_array())
        throw SchemaError("parameter '" + def.name + "': missing choices", "choices");
      for (const auto& c : entry["choices"]) def.choices.push_back(c.get<std::string>());
    } else {
      if (entry.contains("choices"))
        throw SchemaError("parameter '" + def.name + "': numeric takes range, not choices");
      if (!entry.contains("range") || !entry["range"].is_array() || entry["range"].size() != 2)
        throw SchemaError("parameter '" + def.name + "': range must be [low, high]", "range");
      def.low = entry["range"][0].get<double>();
      def.high = entry["range"][1].get<double>();
      if (entry.contains("log_scale")) def.log_scale = entry["log_scale"].get<bool>();
    }
    if (!entry.contains("default"))
      throw SchemaError("parameter '" + def.name + "': missing default", "default");
    def.default_value = value_from_json(entry["default"]);
    defs.push_back(std::move(def));
  }

  std::vector<std::string> ranking;
  if (doc.contains("expert_ranking")) {
    for (const auto& name : doc["expert_ranking"]) ranking.push_back(name.get<std::string>());
  }
  return std::make_shared<ConfigurationSpace>(std::move(defs), std::move(ranking));
}

Json config_to_json(const Configuration& config) {
  Json doc = Json::object();
  for (const auto& [name, value] : config.values) doc[name] = value_to_json(value);
  return doc;
}

Configuration config_from_json(const Json& doc) {
  if (!doc.is_object()) throw SchemaError("configuration must be an object");
  Configuration c;
  for (const auto& [name, value] : doc.items()) c.values.emplace(name, value_from_json(value));
  return c;
}

TaskDefinition task_definition_from_json(const Json& doc) {
  expect_fields(doc,
                {"task_id", "space_ref", "beta", "constraints", "budget", "seed",
                 "resource_function", "gamma", "rho", "agd", "context", "meta_features"},
                "task");
  TaskDefinition def;
  def.task_id = require_string(doc, "task_id", "task");
  def.space_ref = require_string(doc, "space_ref", "task");
  def.task.task_id = def.task_id;
  def.task.beta = require_number(doc, "beta", "task");
  if (!(def.task.beta >= 0.0 && def.task.beta <= 1.0))
    throw SchemaError("task: beta must lie in [0,1]", "beta");
  def.task.budget = static_cast<int>(require_number(doc, "budget", "task"));
  if (def.task.budget < 1) throw SchemaError("task: budget must be >= 1", "budget");
  def.task.seed = static_cast<std::uint64_t>(require_number(doc, "seed", "task"));

  if (doc.contains("constraints")) {
    if (!doc["constraints"].is_array())
      throw SchemaError("task: constraints must be an array", "constraints");
    for (const auto& entry : doc["constraints"]) {
      expect_fields(entry, {"metric", "max"}, "task.constraints");
      ConstraintSpec c;
      c.metric = require_string(entry, "metric", "constraint");
      c.name = c.metric + "_max";
      if (entry.contains("max") && !entry["max"].is_null()) {
        c.threshold = entry["max"].get<double>();
        if (!std::isfinite(c.threshold))
          throw SchemaError("constraint: max must be finite", "max");
      } else {
        // Unset: resolved to twice the first observation's metric.
        c.threshold = std::numeric_limits<double>::quiet_NaN();
      }
      def.task.constraints.push_back(std::move(c));
    }
  }

  if (!doc.contains("resource_function"))
    throw SchemaError("task: missing resource_function", "resource_function");
  const Json& rf = doc["resource_function"];
  expect_fields(rf,
                {"c", "instances_param", "cores_param", "memory_param", "cores_constant",
                 "memory_constant"},
                "task.resource_function");
  def.task.resource_fn.coefficient = require_number(rf, "c", "resource_function");
  if (rf.contains("instances_param"))
    def.task.resource_fn.instances_param = rf["instances_param"].get<std::string>();
  if (rf.contains("cores_param"))
    def.task.resource_fn.cores_param = rf["cores_param"].get<std::string>();
  if (rf.contains("memory_param"))
    def.task.resource_fn.memory_param = rf["memory_param"].get<std::string>();
  if (rf.contains("cores_constant"))
    def.task.resource_fn.cores_constant = rf["cores_constant"].get<double>();
  if (rf.contains("memory_constant"))
    def.task.resource_fn.memory_constant = rf["memory_constant"].get<double>();

  if (doc.contains("gamma")) {
    def.task.safety.gamma = doc["gamma"].get<double>();
    if (!(def.task.safety.gamma > 0.0 && def.task.safety.gamma <= 1.0))
      throw SchemaError("task: gamma must lie in (0,1]", "gamma");
  }
  if (doc.contains("rho")) def.task.stopping.rho = doc["rho"].get<double>();
  if (doc.contains("agd")) {
    const Json& agd = doc["agd"];
    expect_fields(agd, {"eta", "period", "eps"}, "task.agd");
    if (agd.contains("eta")) def.task.agd.eta = agd["eta"].get<double>();
    if (agd.contains("period")) def.task.agd.period = agd["period"].get<int>();
    if (agd.contains("eps")) def.task.agd.eps = agd["eps"].get<double>();
  }
  if (doc.contains("context")) {
    const std::string mode = doc["context"].get<std::string>();
    if (mode == "data_size")
      def.task.context_mode = ContextMode::DataSize;
    else if (mode == "hour_of_day")
      def.task.context_mode = ContextMode::HourOfDay;
    else if (mode == "none")
      def.task.context_mode = ContextMode::None;
    else
      throw SchemaError("task: unknown context mode '" + mode + "'", "context");
  }
  if (doc.contains("meta_features"))
    def.task.meta_features = meta_features_from_json(doc["meta_features"]);
  return def;
}

Json task_definition_to_json(const TaskDefinition& def) {
  Json doc;
  doc["task_id"] = def.task_id;
  doc["space_ref"] = def.space_ref;
  doc["beta"] = def.task.beta;
  doc["budget"] = def.task.budget;
  doc["seed"] = def.task.seed;
  Json constraints = Json::array();
  for (const auto& c : def.task.constraints) {
    Json entry;
    entry["metric"] = c.metric;
    if (std::isfinite(c.threshold))
      entry["max"] = c.threshold;
    else
      entry["max"] = nullptr;
    constraints.push_back(std::move(entry));
  }
  doc["constraints"] = std::move(constraints);
  Json rf;
  rf["c"] = def.task.resource_fn.coefficient;
  rf["instances_param"] = def.task.resource_fn.instances_param;
  rf["cores_param"] = def.task.resource_fn.cores_param;
  rf["memory_param"] = def.task.resource_fn.memory_param;
  rf["cores_constant"] = def.task.resource_fn.cores_constant;
  rf["memory_constant"] = def.task.resource_fn.memory_constant;
  doc["resource_function"] = std::move(rf);
  doc["gamma"] = def.task.safety.gamma;
  doc["rho"] = def.task.stopping.rho;
  Json agd;
  agd["eta"] = def.task.agd.eta;
  agd["period"] = def.task.agd.period;
  agd["eps"] = def.task.agd.eps;
  doc["agd"] = std::move(agd);
  switch (def.task.context_mode) {
    case ContextMode::DataSize: doc["context"] = "data_size"; break;
    case ContextMode::HourOfDay: doc["context"] = "hour_of_day"; break;
    case ContextMode::None: doc["context"] = "none"; break;
  }
  if (!def.task.meta_features.values.empty())
    doc["meta_features"] = meta_features_to_json(def.task.meta_features);
  return doc;
}

Json observation_to_json(const Observation& obs) {
  Json doc;
  doc["iteration"] = obs.iteration;
  doc["config"] = config_to_json(obs.config);
  Json ctx;
  ctx["data_size"] = obs.context.data_size;
  ctx["hour"] = obs.context.hour;
  doc["context"] = std::move(ctx);
  doc["runtime"] = obs.runtime;
  doc["resource"] = obs.resource;
  doc["objective"] = std::isfinite(obs.objective) ? Json(obs.objective) : Json("inf");
  doc["metrics"] = obs.metrics;
  doc["feasible"] = obs.feasible;
  doc["failed"] = obs.failed;
  doc["source"] = to_string(obs.source);
  doc["timestamp_ms"] = obs.timestamp_ms;
  if (obs.has_eic) doc["eic"] = obs.eic;
  if (!obs.meta_features.values.empty())
    doc["meta_features"] = meta_features_to_json(obs.meta_features);
  return doc;
}

Observation observation_from_json(const Json& doc) {
  expect_fields(doc,
                {"iteration", "config", "context", "runtime", "resource", "objective", "metrics",
                 "feasible", "failed", "source", "timestamp_ms", "eic", "meta_features"},
                "observation");
  Observation obs;
  obs.iteration = static_cast<int>(require_number(doc, "iteration", "observation"));
  obs.config = config_from_json(doc.at("config"));
  if (doc.contains("context")) {
    obs.context.data_size = doc["context"].value("data_size", 1.0);
    obs.context.hour = doc["context"].value("hour", 0.0);
  }
  obs.runtime = require_number(doc, "runtime", "observation");
  obs.resource = require_number(doc, "resource", "observation");
  if (doc.at("objective").is_string())
    obs.objective = std::numeric_limits<double>::infinity();
  else
    obs.objective = doc.at("objective").get<double>();
  if (doc.contains("metrics"))
    for (const auto& [k, v] : doc["metrics"].items()) obs.metrics[k] = v.get<double>();
  obs.feasible = doc.at("feasible").get<bool>();
  obs.failed = doc.at("failed").get<bool>();
  obs.source = source_from_string(require_string(doc, "source", "observation"));
  obs.timestamp_ms = static_cast<std::int64_t>(require_number(doc, "timestamp_ms", "observation"));
  if (doc.contains("eic")) {
    obs.eic = doc["eic"].get<double>();
    obs.has_eic = true;
  }
  if (doc.contains("meta_features"))
    obs.meta_features = meta_features_from_json(doc["meta_features"]);
  return obs;
}

Json task_record_to_json(const TaskRecord& record) {
  Json doc;
  doc["task_id"] = record.task_id;
  doc["schema_id"] = record.features.schema_id;
  doc["meta_features"] = record.features.values;
  doc["history_ref"] = record.history_ref;
  Json best = Json::array();
  for (const auto& c : record.best_configs) best.push_back(config_to_json(c));
  doc["best_configs"] = std::move(best);
  return doc;
}

TaskRecord task_record_from_json(const Json& doc) {
  expect_fields(doc, {"task_id", "schema_id", "meta_features", "history_ref", "best_configs"},
                "task_record");
  TaskRecord record;
  record.task_id = require_string(doc, "task_id", "task_record");
  record.features.schema_id = require_string(doc, "schema_id", "task_record");
  for (const auto& v : doc.at("meta_features")) record.features.values.push_back(v.get<double>());
  record.history_ref = doc.value("history_ref", std::string{});
  for (const auto& c : doc.at("best_configs")) record.best_configs.push_back(config_from_json(c));
  return record;
}

Json distance_model_to_json(const DistanceModel& model) {
  Json doc;
  doc["version"] = 1;
  doc["schema_id"] = model.schema_id();
  doc["feature_dim"] = model.feature_dim();
  doc["holdout_mae"] = model.holdout_mae();
  const auto& gbm = model.tree_model();
  doc["base_score"] = gbm.base_score;
  doc["learning_rate"] = gbm.learning_rate;
  Json trees = Json::array();
  for (const auto& tree : gbm.trees) {
    Json t;
    Json feature = Json::array(), threshold = Json::array(), left = Json::array(),
         right = Json::array(), value = Json::array();
    for (const auto& n : tree.nodes()) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    t["feature"] = std::move(feature);
    t["threshold"] = std::move(threshold);
    t["left"] = std::move(left);
    t["right"] = std::move(right);
    t["value"] = std::move(value);
    trees.push_back(std::move(t));
  }
  doc["trees"] = std::move(trees);
  return doc;
}

DistanceModel distance_model_from_json(const Json& doc) {
  if (doc.value("version", 0) != 1) throw SchemaError("distance model: unsupported version");
  GradientBoostedTrees gbm;
  gbm.base_score = doc.at("base_score").get<double>();
  gbm.learning_rate = doc.at("learning_rate").get<double>();
  for (const auto& t : doc.at("trees")) {
    RegressionTree tree;
    const auto& feature = t.at("feature");
    const auto& threshold = t.at("threshold");
    const auto& left = t.at("left");
    const auto& right = t.at("right");
    const auto& value = t.at("value");
    for (std::size_t i = 0; i < feature.size(); ++i) {
      TreeNode node;
      node.feature = feature[i].get<int>();
      node.threshold = threshold[i].get<double>();
      node.left = left[i].get<int>();
      node.right = right[i].get<int>();
      node.value = value[i].get<double>();
      tree.nodes_.push_back(node);
    }
    gbm.trees.push_back(std::move(tree));
  }
  return DistanceModel(std::move(gbm), doc.at("schema_id").get<std::string>(),
                       doc.at("feature_dim").get<std::size_t>(),
                       doc.at("holdout_mae").get<double>());
}

namespace {

SyntheticJobSpec job_from_json(const Json& doc) {
  expect_fields(doc,
                {"family", "base_work", "parallel_fraction", "alpha", "mem_per_data",
                 "mem_penalty_coeff", "shuffle_coeff", "skew", "noise_sigma", "drift",
                 "resource_coeff", "stage_count", "read_intensity", "write_intensity",
                 "cpu_intensity", "seed", "instances_param", "cores_param", "memory_param"},
                "job");
  SyntheticJobSpec job;
  job.family = require_string(doc, "family", "job");
  job.base_work = doc.value("base_work", job.base_work);
  job.parallel_fraction = doc.value("parallel_fraction", job.parallel_fraction);
  job.alpha = doc.value("alpha", job.alpha);
  job.mem_per_data = doc.value("mem_per_data", job.mem_per_data);
  job.mem_penalty_coeff = doc.value("mem_penalty_coeff", job.mem_penalty_coeff);
  job.shuffle_coeff = doc.value("shuffle_coeff", job.shuffle_coeff);
  job.skew = doc.value("skew", job.skew);
  job.noise_sigma = doc.value("noise_sigma", job.noise_sigma);
  if (doc.contains("drift")) {
    const Json& drift = doc["drift"];
    expect_fields(drift, {"kind", "period", "amplitude"}, "job.drift");
    const std::string kind = drift.value("kind", std::string{"none"});
    if (kind == "none")
      job.drift.kind = DriftSchedule::Kind::None;
    else if (kind == "sinusoid")
      job.drift.kind = DriftSchedule::Kind::Sinusoid;
    else
      throw SchemaError("job.drift: unknown kind '" + kind + "'", "kind");
    job.drift.period = drift.value("period", job.drift.period);
    job.drift.amplitude = drift.value("amplitude", job.drift.amplitude);
  }
  job.resource_coeff = doc.value("resource_coeff", job.resource_coeff);
  job.stage_count = doc.value("stage_count", job.stage_count);
  job.read_intensity = doc.value("read_intensity", job.read_intensity);
  job.write_intensity = doc.value("write_intensity", job.write_intensity);
  job.cpu_intensity = doc.value("cpu_intensity", job.cpu_intensity);
  job.seed = doc.value("seed", job.seed);
  job.instances_param = doc.value("instances_param", job.instances_param);
  job.cores_param = doc.value("cores_param", job.cores_param);
  job.memory_param = doc.value("memory_param", job.memory_param);
  return job;
}

}  // namespace

BenchmarkScenario scenario_from_json(const Json& doc) {
  expect_fields(doc,
                {"name", "space", "jobs", "task", "toggles", "seeds", "grid", "meta_corpus",
                 "probe_count"},
                "scenario");
  BenchmarkScenario scenario;
  scenario.name = require_string(doc, "name", "scenario");
  if (!doc.contains("space")) throw SchemaError("scenario: missing space", "space");
  scenario.space = space_from_json(doc["space"]);

  if (!doc.contains("jobs") || !doc["jobs"].is_array() || doc["jobs"].empty())
    throw SchemaError("scenario: jobs must be a non-empty array", "jobs");
  for (const auto& j : doc["jobs"]) scenario.jobs.push_back(job_from_json(j));

  if (!doc.contains("task")) throw SchemaError("scenario: missing task settings", "task");
  const Json& task = doc["task"];
  expect_fields(task, {"beta", "budget", "constraints", "gamma", "rho", "agd"}, "scenario.task");
  scenario.beta = require_number(task, "beta", "scenario.task");
  scenario.budget = static_cast<int>(require_number(task, "budget", "scenario.task"));
  if (task.contains("constraints")) {
    for (const auto& entry : task["constraints"]) {
      expect_fields(entry, {"metric", "max", "max_x_default"}, "scenario.constraint");
      ScenarioConstraint c;
      c.metric = require_string(entry, "metric", "scenario.constraint");
      if (entry.contains("max")) c.max_value = entry["max"].get<double>();
      if (entry.contains("max_x_default")) c.max_x_default = entry["max_x_default"].get<double>();
      scenario.constraints.push_back(std::move(c));
    }
  }
  if (task.contains("gamma")) scenario.safety.gamma = task["gamma"].get<double>();
  if (task.contains("rho")) scenario.stopping.rho = task["rho"].get<double>();
  if (task.contains("agd")) {
    const Json& agd = task["agd"];
    expect_fields(agd, {"eta", "period", "eps"}, "scenario.task.agd");
    if (agd.contains("eta")) scenario.agd.eta = agd["eta"].get<double>();
    if (agd.contains("period")) scenario.agd.period = agd["period"].get<int>();
    if (agd.contains("eps")) scenario.agd.eps = agd["eps"].get<double>();
  }

  if (!doc.contains("seeds") || !doc["seeds"].is_array() || doc["seeds"].empty())
    throw SchemaError("scenario: seeds must be a non-empty array", "seeds");
  for (const auto& s : doc["seeds"]) scenario.seeds.push_back(s.get<std::uint64_t>());

  if (!doc.contains("toggles")) throw SchemaError("scenario: missing toggles", "toggles");
  const Json& toggles = doc["toggles"];
  expect_fields(toggles, {"safety", "agd", "meta", "subspace"}, "scenario.toggles");
  auto bool_list = [&](const std::string& key) {
    std::vector<bool> out;
    if (!toggles.contains(key)) {
      out.push_back(true);
      return out;
    }
    for (const auto& v : toggles[key]) out.push_back(v.get<bool>());
    if (out.empty()) out.push_back(true);
    return out;
  };
  const std::vector<bool> safety_variants = bool_list("safety");
  const std::vector<bool> agd_variants = bool_list("agd");
  std::vector<bool> meta_variants;
  if (toggles.contains("meta"))
    for (const auto& v : toggles["meta"]) meta_variants.push_back(v.get<bool>());
  if (meta_variants.empty()) meta_variants.push_back(false);
  std::vector<SubspaceMode> subspace_variants;
  if (toggles.contains("subspace")) {
    for (const auto& v : toggles["subspace"]) {
      const std::string s = v.get<std::string>();
      if (s == "adaptive")
        subspace_variants.push_back(SubspaceMode::Adaptive);
      else if (s == "fixed")
        subspace_variants.push_back(SubspaceMode::Fixed);
      else if (s == "full")
        subspace_variants.push_back(SubspaceMode::Full);
      else
        throw SchemaError("scenario.toggles: unknown subspace mode '" + s + "'", "subspace");
    }
  }
  if (subspace_variants.empty()) subspace_variants.push_back(SubspaceMode::Adaptive);

  for (bool safety : safety_variants)
    for (bool agd : agd_variants)
      for (bool meta : meta_variants)
        for (SubspaceMode mode : subspace_variants) {
          ToggleSet t;
          t.safety = safety;
          t.agd = agd;
          t.meta = meta;
          t.subspace = mode;
          scenario.toggle_sets.push_back(t);
        }

  if (!doc.contains("grid")) throw SchemaError("scenario: missing oracle grid", "grid");
  const Json& grid = doc["grid"];
  scenario.oracle_grid.axes.resize(scenario.space->dimension());
  for (const auto& [name, values] : grid.items()) {
    const std::size_t idx = scenario.space->index_of(name);
    for (const auto& v : values) scenario.oracle_grid.axes[idx].push_back(value_from_json(v));
  }
  for (std::size_t i = 0; i < scenario.oracle_grid.axes.size(); ++i)
    if (scenario.oracle_grid.axes[i].empty())
      throw SchemaError("scenario.grid: no values for parameter '" +
                            scenario.space->param(i).name + "'",
                        "grid");

  if (doc.contains("meta_corpus")) {
    for (const auto& entry : doc["meta_corpus"]) {
      expect_fields(entry, {"job", "seed", "budget"}, "scenario.meta_corpus");
      BenchmarkScenario::CorpusEntry e;
      e.job_index = entry.at("job").get<std::size_t>();
      e.seed = entry.at("seed").get<std::uint64_t>();
      e.budget = entry.value("budget", e.budget);
      scenario.meta_corpus.push_back(e);
    }
  }
  if (doc.contains("probe_count")) scenario.probe_count = doc["probe_count"].get<std::size_t>();
  return scenario;
}

Json report_to_json(const BenchmarkReport& report) {
  Json doc;
  doc["scenario"] = report.scenario_name;
  Json runs = Json::array();
  for (const auto& run : report.runs) {
    Json r;
    r["job"] = run.job_family;
    r["toggles"] = run.toggles;
    r["seed"] = run.seed;
    r["safe_ratio"] = run.safe_ratio;
    r["final_incumbent"] =
        std::isfinite(run.final_incumbent) ? Json(run.final_incumbent) : Json("inf");
    r["oracle_objective"] = run.oracle_objective;
    r["final_gap"] = std::isfinite(run.final_gap) ? Json(run.final_gap) : Json("inf");
    r["iterations_to_threshold"] = run.iterations_to_threshold;
    Json traj = Json::array();
    for (const auto& pt : run.trajectory) {
      Json p;
      p["iteration"] = pt.iteration;
      p["objective"] = pt.objective;
      p["best_feasible"] =
          std::isfinite(pt.best_feasible) ? Json(pt.best_feasible) : Json("inf");
      p["feasible"] = pt.feasible;
      p["source"] = pt.source;
      traj.push_back(std::move(p));
    }
    r["trajectory"] = std::move(traj);
    runs.push_back(std::move(r));
  }
  doc["runs"] = std::move(runs);
  return doc;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open file '" + path + "'");
  Json doc;
  try {
    in >> doc;
  } catch (const Json::parse_error& e) {
    throw SchemaError("invalid JSON in '" + path + "': " + e.what());
  }
  return doc;
}

void write_json_file(const std::string& path, const Json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write file '" + path + "'");
  out << doc.dump(2) << "\n";
}

}  // namespace otune
