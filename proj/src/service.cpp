#include "otune/service.hpp"

#include <httplib.h>

#include <chrono>
#include <filesystem>
#include <set>

#include "otune/errors.hpp"

namespace fs = std::filesystem;

namespace otune {

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Json incumbent_summary(const Engine& engine) {
  Json out;
  const Observation* best = engine.incumbent();
  const bool feasible = best != nullptr;
  if (!best) best = engine.best_observation();
  if (!best) return Json(nullptr);
  out["configuration"] = config_to_json(best->config);
  out["objective"] = best->objective;
  out["feasible"] = feasible;
  out["iteration"] = best->iteration;
  return out;
}

}  // namespace

TuningService::TuningService(ServiceConfig config)
    : config_(std::move(config)), store_(config_.data_dir) {
  meta_repo_ = load_meta_repository();
  for (const auto& id : store_.task_ids()) tasks_.emplace(id, load_task(id));
}

std::shared_ptr<const MetaRepository> TuningService::load_meta_repository() const {
  auto repo = std::make_shared<MetaRepository>();
  repo->tasks = store_.load_task_records();
  if (auto model = store_.load_distance_model())
    repo->distance_model = std::make_shared<DistanceModel>(std::move(*model));
  return repo;
}

std::unique_ptr<TuningService::TaskRuntime> TuningService::load_task(
    const std::string& task_id) const {
  auto runtime = std::make_unique<TaskRuntime>();
  runtime->definition_doc = store_.get_task_definition(task_id);
  runtime->definition = task_definition_from_json(runtime->definition_doc);

  fs::path space_path = runtime->definition.space_ref;
  if (space_path.is_relative()) space_path = fs::path(store_.data_dir()) / space_path;
  runtime->definition.task.space = space_from_json(load_json_file(space_path.string()));

  runtime->engine = std::make_unique<Engine>(runtime->definition.task, meta_repo_);
  for (const auto& obs : store_.load_history(task_id)) {
    Measured measured;
    measured.runtime = obs.runtime;
    measured.resource = obs.resource;
    measured.metrics = obs.metrics;
    measured.context = obs.context;
    measured.crashed = obs.failed;
    measured.meta_features = obs.meta_features;
    measured.timestamp_ms = obs.timestamp_ms;
    Engine::ImportInfo info;
    info.source = obs.source;
    info.eic = obs.eic;
    info.has_eic = obs.has_eic;
    runtime->engine->observe(obs.config, measured, info);
  }
  return runtime;
}

TuningService::TaskRuntime& TuningService::runtime(const std::string& task_id) {
  std::lock_guard<std::mutex> lock(registry_mutex_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw NotFoundError("unknown task '" + task_id + "'");
  return *it->second;
}

Json TuningService::create_task(const Json& definition) {
  TaskDefinition def = task_definition_from_json(definition);

  std::lock_guard<std::mutex> lock(registry_mutex_);
  auto it = tasks_.find(def.task_id);
  if (it != tasks_.end()) {
    if (it->second->definition_doc != definition)
      throw ConflictError("task '" + def.task_id + "' already exists with a different definition");
    Json out;
    out["task_id"] = def.task_id;
    out["status"] = to_string(it->second->engine->status());
    return out;
  }

  // Validate the space reference before anything is persisted.
  fs::path space_path = def.space_ref;
  if (space_path.is_relative()) space_path = fs::path(store_.data_dir()) / space_path;
  def.task.space = space_from_json(load_json_file(space_path.string()));

  store_.put_task_definition(def.task_id, definition);
  auto runtime = std::make_unique<TaskRuntime>();
  runtime->definition_doc = definition;
  runtime->definition = def;
  runtime->engine = std::make_unique<Engine>(def.task, meta_repo_);
  tasks_.emplace(def.task_id, std::move(runtime));

  Json out;
  out["task_id"] = def.task_id;
  out["status"] = "initializing";
  return out;
}

Json TuningService::suggest(const std::string& task_id) {
  TaskRuntime& rt = runtime(task_id);
  std::lock_guard<std::mutex> lock(rt.mutex);
  const Suggestion s = rt.engine->suggest();
  Json out;
  out["configuration"] = config_to_json(s.config);
  out["source"] = to_string(s.source);
  out["iteration"] = s.iteration;
  return out;
}

Json TuningService::observe(const std::string& task_id, const Json& metrics) {
  TaskRuntime& rt = runtime(task_id);
  std::lock_guard<std::mutex> lock(rt.mutex);

  static const std::set<std::string> allowed = {"runtime",  "resource", "metrics",
                                                "context",  "crashed",  "meta_features",
                                                "imported", "config"};
  for (const auto& [key, _] : metrics.items())
    if (!allowed.count(key)) throw SchemaError("observe: unknown field '" + key + "'", key);

  Measured measured;
  measured.timestamp_ms = now_ms();
  measured.crashed = metrics.value("crashed", false);
  if (!measured.crashed) {
    if (!metrics.contains("runtime") || !metrics["runtime"].is_number())
      throw SchemaError("observe: missing numeric field 'runtime'", "runtime");
    measured.runtime = metrics["runtime"].get<double>();
    if (measured.runtime <= 0.0) throw SchemaError("observe: runtime must be > 0", "runtime");
  }

  const bool imported = metrics.value("imported", false);
  Configuration config;
  if (imported) {
    if (!metrics.contains("config"))
      throw SchemaError("observe: imported record requires 'config'", "config");
    config = config_from_json(metrics["config"]);
  } else if (rt.engine->outstanding()) {
    config = rt.engine->outstanding()->config;
  } else if (rt.engine->status() == TaskStatus::Stopped) {
    const Observation* best = rt.engine->incumbent();
    if (!best) best = rt.engine->best_observation();
    if (!best) throw StateError("observe: stopped task has no observations");
    config = best->config;  // replay of the returned best configuration
  } else {
    throw StateError("observe without an outstanding suggestion (use imported:true to import)");
  }

  if (metrics.contains("resource") && metrics["resource"].is_number()) {
    measured.resource = metrics["resource"].get<double>();
    if (!measured.crashed && measured.resource <= 0.0)
      throw SchemaError("observe: resource must be > 0", "resource");
  } else {
    measured.resource = resource_usage(config, rt.definition.task.resource_fn);
  }
  if (metrics.contains("metrics"))
    for (const auto& [k, v] : metrics["metrics"].items()) measured.metrics[k] = v.get<double>();
  if (metrics.contains("context")) {
    measured.context.data_size = metrics["context"].value("data_size", 1.0);
    measured.context.hour = metrics["context"].value("hour", 0.0);
  }
  if (metrics.contains("meta_features"))
    measured.meta_features = {metrics["meta_features"].value("schema_id", std::string{}),
                              metrics["meta_features"].value("values", std::vector<double>{})};

  std::optional<Engine::ImportInfo> info;
  if (imported) info = Engine::ImportInfo{SuggestionSource::WarmStart, 0.0, false};
  const Observation obs = rt.engine->observe(config, measured, info);

  // Durable append before acknowledging; on failure the in-memory engine is
  // rebuilt from the log so state never runs ahead of the disk.
  try {
    store_.append_observation(task_id, obs);
  } catch (...) {
    auto fresh = load_task(task_id);
    std::lock_guard<std::mutex> reg(registry_mutex_);
    tasks_[task_id]->engine = std::move(fresh->engine);
    throw;
  }

  Json out;
  out["ack"] = true;
  out["iteration"] = obs.iteration;
  out["feasible"] = obs.feasible;
  out["incumbent"] = incumbent_summary(*rt.engine);
  return out;
}

Json TuningService::best(const std::string& task_id) {
  TaskRuntime& rt = runtime(task_id);
  std::lock_guard<std::mutex> lock(rt.mutex);
  const Json summary = incumbent_summary(*rt.engine);
  if (summary.is_null()) throw StateError("task '" + task_id + "' has no observations yet");
  return summary;
}

Json TuningService::status(const std::string& task_id) {
  TaskRuntime& rt = runtime(task_id);
  std::lock_guard<std::mutex> lock(rt.mutex);
  Json out;
  out["task_id"] = task_id;
  out["status"] = to_string(rt.engine->status());
  out["observations"] = rt.engine->history().size();
  out["budget"] = rt.definition.task.budget;
  out["incumbent"] = incumbent_summary(*rt.engine);
  return out;
}

Json TuningService::export_history(const std::string& task_id) {
  TaskRuntime& rt = runtime(task_id);
  std::lock_guard<std::mutex> lock(rt.mutex);
  Json observations = Json::array();
  for (const auto& obs : rt.engine->history()) observations.push_back(observation_to_json(obs));
  Json out;
  out["task_id"] = task_id;
  out["observations"] = std::move(observations);
  return out;
}

namespace {

Json error_body(const std::string& error_class, const std::string& message) {
  Json out;
  out["status"] = "error";
  out["error_class"] = error_class;
  out["message"] = message;
  out["engine_version"] = kEngineVersion;
  return out;
}

void respond_ok(httplib::Response& res, Json payload) {
  Json body;
  body["status"] = "ok";
  body["payload"] = std::move(payload);
  body["engine_version"] = kEngineVersion;
  res.status = 200;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void handle(httplib::Response& res, Fn&& fn) {
  try {
    respond_ok(res, fn());
  } catch (const SchemaError& e) {
    res.status = 400;
    Json body = error_body("schema", e.what());
    if (!e.field_path.empty()) body["field"] = e.field_path;
    res.set_content(body.dump(), "application/json");
  } catch (const NotFoundError& e) {
    res.status = 404;
    res.set_content(error_body("not_found", e.what()).dump(), "application/json");
  } catch (const ConflictError& e) {
    res.status = 409;
    res.set_content(error_body("conflict", e.what()).dump(), "application/json");
  } catch (const StateError& e) {
    res.status = 409;
    res.set_content(error_body("state", e.what()).dump(), "application/json");
  } catch (const Error& e) {
    res.status = 500;
    res.set_content(error_body("internal", e.what()).dump(), "application/json");
  } catch (const std::exception& e) {
    res.status = 500;
    res.set_content(error_body("internal", e.what()).dump(), "application/json");
  }
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  Json doc = Json::parse(req.body, nullptr, false);
  if (doc.is_discarded()) throw SchemaError("request body is not valid JSON");
  return doc;
}

}  // namespace

int run_http_server(TuningService& service, const std::string& listen_address, int port) {
  httplib::Server server;

  server.Post("/tasks", [&](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return service.create_task(parse_body(req)); });
  });
  server.Post(R"(/tasks/([^/]+)/suggest)", [&](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return service.suggest(req.matches[1]); });
  });
  server.Post(R"(/tasks/([^/]+)/observe)", [&](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return service.observe(req.matches[1], parse_body(req)); });
  });
  server.Get(R"(/tasks/([^/]+)/best)", [&](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return service.best(req.matches[1]); });
  });
  server.Get(R"(/tasks/([^/]+)/status)", [&](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return service.status(req.matches[1]); });
  });
  server.Get(R"(/tasks/([^/]+)/history)", [&](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return service.export_history(req.matches[1]); });
  });

  return server.listen(listen_address, port) ? 0 : 1;
}

}  // namespace otune
