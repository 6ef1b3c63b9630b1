#include "otune/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "otune/errors.hpp"

namespace fs = std::filesystem;

namespace otune {

RunHistoryStore::RunHistoryStore(std::string data_dir) : data_dir_(std::move(data_dir)) {
  fs::create_directories(fs::path(data_dir_) / "tasks");
  fs::create_directories(fs::path(data_dir_) / "meta" / "tasks");
}

std::string RunHistoryStore::task_dir(const std::string& task_id) const {
  if (task_id.empty() || task_id.find('/') != std::string::npos ||
      task_id.find("..") != std::string::npos)
    throw SchemaError("invalid task id '" + task_id + "'", "task_id");
  return (fs::path(data_dir_) / "tasks" / task_id).string();
}

std::string RunHistoryStore::history_path(const std::string& task_id) const {
  return (fs::path(task_dir(task_id)) / "history.jsonl").string();
}

std::vector<std::string> RunHistoryStore::task_ids() const {
  std::vector<std::string> ids;
  const fs::path root = fs::path(data_dir_) / "tasks";
  if (!fs::exists(root)) return ids;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && fs::exists(entry.path() / "definition.json"))
      ids.push_back(entry.path().filename().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool RunHistoryStore::has_task(const std::string& task_id) const {
  return fs::exists(fs::path(task_dir(task_id)) / "definition.json");
}

void RunHistoryStore::put_task_definition(const std::string& task_id, const Json& definition) {
  const fs::path dir = task_dir(task_id);
  fs::create_directories(dir);
  write_json_file((dir / "definition.json").string(), definition);
}

Json RunHistoryStore::get_task_definition(const std::string& task_id) const {
  const fs::path path = fs::path(task_dir(task_id)) / "definition.json";
  if (!fs::exists(path)) throw NotFoundError("unknown task '" + task_id + "'");
  return load_json_file(path.string());
}

void RunHistoryStore::append_line(const std::string& path, const std::string& line,
                                  std::size_t max_bytes) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw Error("cannot open '" + path + "': " + std::strerror(errno));
  const std::size_t count = std::min(max_bytes, line.size());
  std::size_t written = 0;
  while (written < count) {
    const ssize_t n = ::write(fd, line.data() + written, count - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw Error("write to '" + path + "' failed: " + std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    throw Error("fsync of '" + path + "' failed: " + std::strerror(errno));
  }
  ::close(fd);
}

void RunHistoryStore::append_observation(const std::string& task_id, const Observation& obs) {
  if (!has_task(task_id)) throw NotFoundError("unknown task '" + task_id + "'");
  const std::string line = observation_to_json(obs).dump() + "\n";
  append_line(history_path(task_id), line, line.size());
}

void RunHistoryStore::append_observation_torn(const std::string& task_id, const Observation& obs,
                                              std::size_t bytes) {
  if (!has_task(task_id)) throw NotFoundError("unknown task '" + task_id + "'");
  const std::string line = observation_to_json(obs).dump() + "\n";
  append_line(history_path(task_id), line, bytes);
}

std::vector<Observation> RunHistoryStore::load_history(const std::string& task_id) const {
  std::vector<Observation> history;
  const std::string path = history_path(task_id);
  std::ifstream in(path);
  if (!in) return history;

  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  const bool ends_with_newline = !lines.empty() && [&] {
    std::ifstream raw(path, std::ios::binary | std::ios::ate);
    const auto size = raw.tellg();
    if (size <= 0) return false;
    raw.seekg(-1, std::ios::end);
    char last = 0;
    raw.get(last);
    return last == '\n';
  }();

  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    Json doc = Json::parse(lines[i], nullptr, false);
    if (doc.is_discarded()) {
      const bool is_last = i + 1 == lines.size();
      if (is_last && !ends_with_newline) break;  // torn tail from a crash mid-append
      throw DataError("corrupt observation record at line " + std::to_string(i + 1) + " of " +
                      path);
    }
    history.push_back(observation_from_json(doc));
  }
  return history;
}

void RunHistoryStore::put_task_record(const TaskRecord& record) {
  const fs::path path = fs::path(data_dir_) / "meta" / "tasks" / (record.task_id + ".json");
  write_json_file(path.string(), task_record_to_json(record));
}

std::vector<TaskRecord> RunHistoryStore::load_task_records() const {
  std::vector<TaskRecord> records;
  const fs::path root = fs::path(data_dir_) / "meta" / "tasks";
  if (!fs::exists(root)) return records;
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.path().extension() == ".json") paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  for (const auto& path : paths)
    records.push_back(task_record_from_json(load_json_file(path.string())));
  return records;
}

void RunHistoryStore::put_distance_model(const DistanceModel& model) {
  const fs::path path = fs::path(data_dir_) / "meta" / "distance_model.json";
  write_json_file(path.string(), distance_model_to_json(model));
}

std::optional<DistanceModel> RunHistoryStore::load_distance_model() const {
  const fs::path path = fs::path(data_dir_) / "meta" / "distance_model.json";
  if (!fs::exists(path)) return std::nullopt;
  return distance_model_from_json(load_json_file(path.string()));
}

}  // namespace otune
