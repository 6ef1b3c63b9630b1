#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "otune/errors.hpp"
#include "otune/harness.hpp"
#include "otune/json_io.hpp"
#include "otune/service.hpp"
#include "otune/store.hpp"
#include "otune/subspace.hpp"

namespace fs = std::filesystem;
using namespace otune;

namespace {

struct GlobalOptions {
  std::string data_dir = "./otune-data";
  std::string listen = "127.0.0.1:8344";
  std::uint64_t seed = 0;
  std::string log_level = "info";
};

std::pair<std::string, int> split_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) return {listen, 8344};
  return {listen.substr(0, colon), std::stoi(listen.substr(colon + 1))};
}

int cmd_serve(const GlobalOptions& opts) {
  TuningService service({opts.data_dir});
  const auto [address, port] = split_listen(opts.listen);
  if (opts.log_level != "quiet")
    std::cerr << "otune: serving " << opts.data_dir << " on " << address << ":" << port << "\n";
  return run_http_server(service, address, port);
}

int cmd_simulate(const GlobalOptions&, const std::string& scenario_path, std::string out_path) {
  const Json doc = load_json_file(scenario_path);
  const BenchmarkScenario scenario = scenario_from_json(doc);
  const BenchmarkReport report = run_benchmark(scenario);
  if (out_path.empty()) out_path = scenario_path + ".report.json";
  write_json_file(out_path, report_to_json(report));
  std::cout << format_report_table(report);
  std::cout << "report: " << out_path << "\n";
  return 0;
}

std::pair<TaskDefinition, RunHistory> load_task_state(const std::string& data_dir,
                                                      const std::string& task_id) {
  RunHistoryStore store(data_dir);
  TaskDefinition def = task_definition_from_json(store.get_task_definition(task_id));
  fs::path space_path = def.space_ref;
  if (space_path.is_relative()) space_path = fs::path(data_dir) / space_path;
  def.task.space = space_from_json(load_json_file(space_path.string()));
  return {std::move(def), store.load_history(task_id)};
}

int cmd_importance(const GlobalOptions& opts, const std::string& task_id) {
  auto [def, history] = load_task_state(opts.data_dir, task_id);
  std::vector<Configuration> configs;
  std::vector<double> objectives;
  for (const auto& obs : history) {
    if (obs.failed) continue;
    configs.push_back(obs.config);
    objectives.push_back(obs.objective);
  }
  const ImportanceReport report =
      importance_scores(configs, objectives, *def.task.space, opts.seed);

  Json out;
  out["task_id"] = task_id;
  out["low_confidence"] = report.low_confidence;
  out["sample_count"] = report.sample_count;
  Json scores = Json::array();
  for (const auto& name : report.ranking()) {
    Json entry;
    entry["parameter"] = name;
    entry["score"] = report.score_of(name);
    scores.push_back(std::move(entry));
  }
  out["scores"] = std::move(scores);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_report(const GlobalOptions& opts, const std::string& task_id) {
  auto [def, history] = load_task_state(opts.data_dir, task_id);
  if (history.empty()) {
    std::cout << "task " << task_id << ": no observations\n";
    return 0;
  }

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> incumbents;
  std::printf("%5s  %-10s  %12s  %12s  %8s\n", "iter", "source", "objective", "incumbent", "feasible");
  for (const auto& obs : history) {
    if (obs.feasible && obs.objective < best) best = obs.objective;
    incumbents.push_back(best);
    std::printf("%5d  %-10s  %12.4f  %12.4f  %8s\n", obs.iteration,
                to_string(obs.source).c_str(), obs.objective,
                std::isfinite(best) ? best : 0.0, obs.feasible ? "yes" : "no");
  }

  // Text plot of the incumbent trajectory, best value at the bottom.
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double v : incumbents)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (std::isfinite(lo)) {
    const int rows = 8;
    std::cout << "\nincumbent objective over iterations (" << lo << " .. " << hi << ")\n";
    for (int r = rows; r >= 1; --r) {
      std::string line;
      const double level = lo + (hi - lo) * (static_cast<double>(r) - 0.5) / rows;
      for (double v : incumbents)
        line += (std::isfinite(v) && (v >= level || (r == 1 && v <= lo))) ? '#' : ' ';
      std::cout << line << "\n";
    }
  }
  return 0;
}

int cmd_replay(const std::string& log_path) {
  fs::path history_file = log_path;
  if (fs::is_directory(history_file)) history_file /= "history.jsonl";
  const fs::path task_dir = history_file.parent_path();
  const fs::path definition_file = task_dir / "definition.json";
  if (!fs::exists(definition_file))
    throw NotFoundError("no definition.json next to '" + history_file.string() + "'");

  TaskDefinition def = task_definition_from_json(load_json_file(definition_file.string()));
  fs::path space_path = def.space_ref;
  if (space_path.is_relative()) {
    // Task directories live at <data-dir>/tasks/<id>; space refs are
    // relative to the data dir.
    space_path = task_dir.parent_path().parent_path() / space_path;
  }
  def.task.space = space_from_json(load_json_file(space_path.string()));

  Engine engine(def.task);
  std::ifstream in(history_file);
  if (!in) throw NotFoundError("cannot open '" + history_file.string() + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json doc = Json::parse(line, nullptr, false);
    if (doc.is_discarded()) break;  // torn tail
    const Observation obs = observation_from_json(doc);
    Measured measured;
    measured.runtime = obs.runtime;
    measured.resource = obs.resource;
    measured.metrics = obs.metrics;
    measured.context = obs.context;
    measured.crashed = obs.failed;
    measured.meta_features = obs.meta_features;
    measured.timestamp_ms = obs.timestamp_ms;
    engine.observe(obs.config, measured, Engine::ImportInfo{obs.source, obs.eic, obs.has_eic});
  }

  const Observation* best = engine.incumbent();
  const bool feasible = best != nullptr;
  if (!best) best = engine.best_observation();
  if (!best) {
    std::cout << "{}\n";
    return 0;
  }
  Json out;
  out["configuration"] = config_to_json(best->config);
  out["objective"] = best->objective;
  out["feasible"] = feasible;
  out["observations"] = engine.history().size();
  out["status"] = to_string(engine.status());
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"otune: online black-box tuning for recurring jobs"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--data-dir", opts.data_dir, "Service data directory")->envname("OTUNE_DATA_DIR");
  app.add_option("--listen", opts.listen, "Listen address host:port")->envname("OTUNE_LISTEN");
  app.add_option("--seed", opts.seed, "Seed for offline analyses")->envname("OTUNE_SEED");
  app.add_option("--log-level", opts.log_level, "quiet|info")->envname("OTUNE_LOG_LEVEL");

  auto* serve = app.add_subcommand("serve", "Start the tuning service");

  std::string scenario_path, out_path;
  auto* simulate = app.add_subcommand("simulate", "Run a benchmark scenario against the simulator");
  simulate->add_option("scenario", scenario_path, "Scenario file")->required();
  simulate->add_option("--out", out_path, "Report output path");

  std::string task_id;
  auto* importance = app.add_subcommand("importance", "Parameter importance for a task");
  importance->add_option("task_id", task_id, "Task id")->required();

  auto* report = app.add_subcommand("report", "Trajectory summary for a task");
  report->add_option("task_id", task_id, "Task id")->required();

  std::string log_path;
  auto* replay = app.add_subcommand("replay", "Reconstruct state from a history log");
  replay->add_option("log", log_path, "history.jsonl file or task directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage error
  }

  try {
    if (serve->parsed()) return cmd_serve(opts);
    if (simulate->parsed()) return cmd_simulate(opts, scenario_path, out_path);
    if (importance->parsed()) return cmd_importance(opts, task_id);
    if (report->parsed()) return cmd_report(opts, task_id);
    if (replay->parsed()) return cmd_replay(log_path);
  } catch (const SchemaError& e) {
    std::cerr << "schema_error: " << e.what() << "\n";
    return 1;
  } catch (const NotFoundError& e) {
    std::cerr << "not_found: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
