#pragma once

#include <optional>
#include <string>
#include <vector>

#include "otune/engine.hpp"
#include "otune/json_io.hpp"

namespace otune {

/// Durable, append-only run-history storage. Layout under the data dir:
///
///   tasks/<task_id>/definition.json
///   tasks/<task_id>/history.jsonl      (one observation per line)
///   meta/tasks/<task_id>.json
///   meta/distance_model.json
///
/// Observation appends are flushed and fsynced before returning, so an
/// acknowledged observe survives a crash; a torn final line is dropped on
/// load.
class RunHistoryStore {
 public:
  explicit RunHistoryStore(std::string data_dir);

  const std::string& data_dir() const { return data_dir_; }
  std::string task_dir(const std::string& task_id) const;

  std::vector<std::string> task_ids() const;
  bool has_task(const std::string& task_id) const;
  void put_task_definition(const std::string& task_id, const Json& definition);
  Json get_task_definition(const std::string& task_id) const;

  void append_observation(const std::string& task_id, const Observation& obs);
  std::vector<Observation> load_history(const std::string& task_id) const;

  // Meta repository section.
  void put_task_record(const TaskRecord& record);
  std::vector<TaskRecord> load_task_records() const;
  void put_distance_model(const DistanceModel& model);
  std::optional<DistanceModel> load_distance_model() const;

  /// Test hook: writes only the first `bytes` bytes of the encoded record,
  /// simulating a crash in the middle of an append.
  void append_observation_torn(const std::string& task_id, const Observation& obs,
                               std::size_t bytes);

 private:
  std::string history_path(const std::string& task_id) const;
  void append_line(const std::string& path, const std::string& line, std::size_t max_bytes);

  std::string data_dir_;
};

}  // namespace otune
