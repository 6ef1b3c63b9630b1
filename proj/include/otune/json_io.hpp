#pragma once

#include <json.hpp>
#include <memory>
#include <string>

#include "otune/engine.hpp"
#include "otune/harness.hpp"
#include "otune/space.hpp"

namespace otune {

using Json = nlohmann::json;

// ---- configuration space document ----
// {"parameters":[{name, kind, range|choices, log_scale?, default}], "expert_ranking"?}
// Unknown fields are rejected.
Json space_to_json(const ConfigurationSpace& space);
std::shared_ptr<ConfigurationSpace> space_from_json(const Json& doc);

Json value_to_json(const ParamValue& value);
ParamValue value_from_json(const Json& doc);

Json config_to_json(const Configuration& config);
Configuration config_from_json(const Json& doc);

// ---- task definition document ----
// {task_id, space_ref, beta, constraints:[{metric,max}], budget, seed,
//  resource_function:{c,...}} plus documented optional fields.
struct TaskDefinition {
  std::string task_id;
  std::string space_ref;
  TuningTask task;  // task.space left null until the space file is loaded
};
TaskDefinition task_definition_from_json(const Json& doc);
Json task_definition_to_json(const TaskDefinition& def);

// ---- observation log records (one JSON document per line) ----
Json observation_to_json(const Observation& obs);
Observation observation_from_json(const Json& doc);

// ---- meta repository documents ----
Json task_record_to_json(const TaskRecord& record);
// The surrogate snapshot is rebuilt from the referenced history elsewhere.
TaskRecord task_record_from_json(const Json& doc);

Json distance_model_to_json(const DistanceModel& model);
DistanceModel distance_model_from_json(const Json& doc);

// ---- benchmark scenario and report ----
BenchmarkScenario scenario_from_json(const Json& doc);
Json report_to_json(const BenchmarkReport& report);

Json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& doc);

}  // namespace otune
