#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "otune/engine.hpp"
#include "otune/json_io.hpp"
#include "otune/store.hpp"

namespace otune {

inline constexpr const char* kEngineVersion = "0.1.0";

struct ServiceConfig {
  std::string data_dir;
  std::string listen_address = "127.0.0.1";
  int port = 8344;
};

/// Long-running tuning front end. Requests for one task are serialized
/// through a per-task mutex; distinct tasks proceed in parallel. Every
/// observation is durably appended before it is acknowledged, and startup
/// replays the logs to reconstruct engine state.
class TuningService {
 public:
  explicit TuningService(ServiceConfig config);

  /// {task_id, status}; idempotent for identical bodies, conflict otherwise.
  Json create_task(const Json& definition);
  /// {configuration, source, iteration}; idempotent until the next observe.
  Json suggest(const std::string& task_id);
  /// {ack, incumbent?}; validates and persists the metrics document.
  Json observe(const std::string& task_id, const Json& metrics);
  /// Best feasible observation, or best raw with feasible=false.
  Json best(const std::string& task_id);
  Json status(const std::string& task_id);
  Json export_history(const std::string& task_id);

  RunHistoryStore& store() { return store_; }

 private:
  struct TaskRuntime {
    TaskDefinition definition;
    Json definition_doc;
    std::unique_ptr<Engine> engine;
    std::mutex mutex;
  };

  TaskRuntime& runtime(const std::string& task_id);
  std::unique_ptr<TaskRuntime> load_task(const std::string& task_id) const;
  std::shared_ptr<const MetaRepository> load_meta_repository() const;

  ServiceConfig config_;
  RunHistoryStore store_;
  std::shared_ptr<const MetaRepository> meta_repo_;
  std::mutex registry_mutex_;
  std::map<std::string, std::unique_ptr<TaskRuntime>> tasks_;
};

/// Blocking HTTP server exposing the service endpoints. Returns 0 on clean
/// shutdown, nonzero when the listener could not start.
int run_http_server(TuningService& service, const std::string& listen_address, int port);

}  // namespace otune
