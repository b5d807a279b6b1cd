#include "simboot/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "simboot/bootstrap.hpp"
#include "simboot/prompt.hpp"

namespace simboot {

namespace {

namespace fs = std::filesystem;

// Options shared by generate, evaluate and sweep. Values only apply when the
// flag was given, so flags override the config file.
struct RunFlags {
  std::string config;
  std::string tasks;
  std::size_t n = 0;
  std::size_t episodes = 0;
  std::uint64_t seed = 0;
  std::size_t parallel = 1;
  std::string planner;
  std::string state;
  std::string out;
  std::size_t max_attempts = 0;
  bool verbose = false;

  CLI::Option* n_opt = nullptr;
  CLI::Option* episodes_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* parallel_opt = nullptr;
  CLI::Option* max_attempts_opt = nullptr;
};

void add_run_flags(CLI::App* app, RunFlags& f, bool collection, bool evaluation) {
  app->add_option("--config", f.config, "JSON run config file (flags override it)");
  app->add_option("--tasks", f.tasks, "Comma-separated task ids, or 'all'");
  if (collection) {
    f.n_opt = app->add_option("--n", f.n, "Verified records to collect per task");
    f.max_attempts_opt = app->add_option("--max-attempts", f.max_attempts, "Attempt budget per task (default 20*N)");
  }
  if (evaluation) f.episodes_opt = app->add_option("--episodes", f.episodes, "Evaluation episodes per task");
  f.seed_opt = app->add_option("--seed", f.seed, "Master seed (drawn and printed when omitted)");
  f.parallel_opt = app->add_option("--parallel", f.parallel, "Worker threads");
  app->add_option("--planner", f.planner, "remote | oracle | oracle-degraded:<rate>");
  app->add_option("--state", f.state, "truth | noisy")->check(CLI::IsMember({"truth", "noisy"}));
  app->add_option("--out", f.out, "Output directory");
  app->add_flag("--verbose", f.verbose, "Log planner requests and responses (API key redacted)");
}

struct UsageError {
  std::string message;
};

RunConfig resolve_config(const RunFlags& f) {
  RunConfig c;
  bool seed_given = false;
  if (!f.config.empty()) {
    auto loaded = load_config_file(f.config, &seed_given);
    if (!loaded) throw UsageError{loaded.error().message};
    c = std::move(loaded).value();
  }
  if (!f.tasks.empty()) {
    nlohmann::json names = nlohmann::json::array();
    if (f.tasks == "all") {
      names = "all";
    } else {
      std::stringstream ss(f.tasks);
      for (std::string t; std::getline(ss, t, ',');) names.push_back(t);
    }
    auto updated = config_from_json({{"tasks", names}}, c);
    if (!updated) throw UsageError{updated.error().message};
    c = std::move(updated).value();
  }
  if (f.n_opt && f.n_opt->count()) c.n_per_task = f.n;
  if (f.max_attempts_opt && f.max_attempts_opt->count()) c.max_attempts_per_task = f.max_attempts;
  if (f.episodes_opt && f.episodes_opt->count()) c.episodes_per_task = f.episodes;
  if (f.parallel_opt->count()) c.parallelism = f.parallel;
  if (!f.planner.empty() && !apply_planner_spec(f.planner, c.planner)) {
    throw UsageError{"--planner must be remote, oracle or oracle-degraded:<rate in [0,1]>"};
  }
  if (!f.state.empty()) c.noisy_state = f.state == "noisy";
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.verbose) c.planner.verbose = true;
  if (f.seed_opt->count()) {
    c.master_seed = f.seed;
  } else if (!seed_given) {
    c.master_seed = (std::uint64_t{std::random_device{}()} << 32) ^ std::random_device{}();
    std::cout << "seed: " << c.master_seed << "\n";
  }
  if (f.episodes_opt && f.episodes_opt->count() && f.episodes == 0) throw UsageError{"--episodes must be >= 1"};
  try {
    c.validate();
    if (c.episodes_per_task == 0) throw ModelError("episodes_per_task must be >= 1");
  } catch (const ModelError& e) {
    throw UsageError{e.what()};
  }
  return c;
}

int generate_exit(const GenerateResult& r) {
  if (r.aborted) return kExitPlanner;
  if (!r.complete) return kExitBudget;
  return kExitOk;
}

int cmd_generate(const RunFlags& flags) {
  const RunConfig config = resolve_config(flags);
  auto planner = make_planner(config.planner);
  const GenerateResult result = generate(config, *planner);
  write_generate_outputs(config.output_dir, result);
  std::cout << report_table(result.reports);
  for (const auto& w : result.aggregate.manifest["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
  std::cout << "wrote " << result.aggregate.records.size() << " records to "
            << (fs::path(config.output_dir) / "dataset.jsonl").string() << "\n";
  if (result.aborted) std::cerr << "error: planner failed repeatedly; see episodes.jsonl\n";
  return generate_exit(result);
}

int cmd_evaluate(const RunFlags& flags) {
  const RunConfig config = resolve_config(flags);
  auto planner = make_planner(config.planner);
  const EvalReport report = evaluate(config, *planner);
  const std::string table = report.table();
  std::cout << table;
  const fs::path dir(config.output_dir);
  const std::string stem = config.noisy_state ? "eval_noisy" : "eval_truth";
  write_file_atomic((dir / (stem + ".json")).string(), report.to_json().dump(2) + "\n");
  write_file_atomic((dir / (stem + ".txt")).string(), table);
  std::size_t planner_errors = 0;
  std::size_t episodes = 0;
  for (const auto& r : report.rows) {
    planner_errors += r.planner_errors;
    episodes += r.episodes;
  }
  if (planner_errors == episodes) {
    std::cerr << "error: every episode failed in the planner\n";
    return kExitPlanner;
  }
  return kExitOk;
}

struct DatasetFiles {
  fs::path dataset;
  fs::path manifest;
};

DatasetFiles locate(const std::string& path) {
  fs::path p(path);
  DatasetFiles files = fs::is_directory(p) ? DatasetFiles{p / "dataset.jsonl", p / "manifest.json"}
                                           : DatasetFiles{p, p.parent_path() / "manifest.json"};
  if (!fs::exists(files.dataset)) throw UsageError{"dataset '" + files.dataset.string() + "' not found"};
  return files;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

nlohmann::json read_manifest(const fs::path& path) {
  auto doc = nlohmann::json::parse(read_file(path.string()), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw UsageError{"manifest '" + path.string() + "' is not valid JSON"};
  return doc;
}

int cmd_replay(const std::string& path, long long index, bool all, bool steps, const std::string& config_path) {
  const DatasetFiles files = locate(path);
  const std::vector<std::string> lines = split_lines(read_file(files.dataset.string()));

  SimConfig sim;
  if (!config_path.empty()) {
    auto loaded = load_config_file(config_path);
    if (!loaded) throw UsageError{loaded.error().message};
    sim = loaded->sim;
  }
  SimConfig snapshot;
  if (fs::exists(files.manifest)) {
    const auto manifest = read_manifest(files.manifest);
    auto s = sim_from_json(manifest.at("config").at("sim"));
    if (!s) throw UsageError{"manifest sim config: " + s.error().message};
    snapshot = *s;
  } else {
    std::cerr << "warning: no manifest next to the dataset; assuming the default simulator config\n";
  }

  std::size_t first = 0;
  std::size_t last = lines.size();
  if (!all) {
    if (index < 0 || static_cast<std::size_t>(index) >= lines.size()) {
      std::cerr << "error: record index " << index << " out of range (dataset has " << lines.size() << " records)\n";
      return kExitUsage;
    }
    first = static_cast<std::size_t>(index);
    last = first + 1;
  }
  const bool show_steps = steps || !all;

  std::size_t failures = 0;
  for (std::size_t i = first; i < last; ++i) {
    auto record = record_from_json_line(lines[i]);
    if (!record) {
      std::cout << "record " << i << ": malformed: " << record.error() << "\n";
      ++failures;
      continue;
    }
    auto outcome = replay(*record, sim, snapshot);
    if (!outcome) {
      std::cerr << "error: " << outcome.error().message << "\n";
      return kExitUsage;
    }
    std::cout << "record " << i << " (" << to_string(record->task_id) << ", seed " << record->seed
              << "): " << to_string(outcome->verdict);
    if (!outcome->reason.empty()) std::cout << ": " << outcome->reason;
    std::cout << "\n";
    if (outcome->verdict != EpisodeVerdict::Success) ++failures;
    if (show_steps && outcome->instance) {
      std::cout << "initial state:\n" << serialize_state(outcome->instance->initial_state);
      for (std::size_t k = 0; k < outcome->states.size(); ++k) {
        const auto& step = outcome->trace[k];
        std::cout << "step " << k + 1 << " [" << to_string(step.event) << "] digest " << step.digest.hex() << "\n"
                  << serialize_state(outcome->states[k]);
      }
    }
  }
  std::cout << (last - first - failures) << " of " << (last - first) << " records replayed to success\n";
  return failures == 0 ? kExitOk : kExitIntegrity;
}

int cmd_inspect(const std::string& path) {
  const DatasetFiles files = locate(path);
  const std::string text = read_file(files.dataset.string());
  const std::vector<std::string> lines = split_lines(text);
  if (!fs::exists(files.manifest)) {
    std::cerr << "error: manifest '" << files.manifest.string() << "' not found\n";
    return kExitIntegrity;
  }
  const auto manifest = read_manifest(files.manifest);
  int status = kExitOk;

  std::cout << "dataset:  " << files.dataset.string() << "\n";
  std::cout << "format:   " << manifest.value("format", "?") << "\n";
  std::cout << "records:  " << lines.size() << " (manifest: " << manifest.value("total_records", 0) << ")\n";
  if (lines.empty()) std::cerr << "warning: dataset is empty\n";
  if (lines.size() != manifest.value("total_records", std::size_t{0})) {
    std::cerr << "integrity failure: record count does not match the manifest\n";
    status = kExitIntegrity;
  }
  const std::string digest = sha256(text).hex();
  std::cout << "sha256:   " << digest << "\n";
  if (digest != manifest.value("dataset_sha256", "")) {
    std::cerr << "integrity failure: dataset sha256 does not match the manifest (" << manifest.value("dataset_sha256", "")
              << ")\n";
    status = kExitIntegrity;
  }
  std::cout << "complete: " << (manifest.value("complete", false) ? "yes" : "no") << "\n";
  for (const auto& w : manifest.value("warnings", nlohmann::json::array())) {
    std::cout << "warning:  " << w.get<std::string>() << "\n";
  }

  std::map<std::string, std::size_t> counts;
  for (const auto& line : lines) {
    auto r = record_from_json_line(line);
    if (r) ++counts[std::string(to_string(r->task_id))];
  }
  std::cout << "\nper-task records:\n";
  for (const auto& t : manifest.value("tasks", nlohmann::json::array())) {
    const std::string id = t.value("task_id", "?");
    std::cout << "  " << id << ": " << counts[id] << " (manifest " << t.value("records", 0) << ", target "
              << t.value("target", 0) << ")\n";
    if (counts[id] != t.value("records", std::size_t{0})) status = kExitIntegrity;
  }

  const fs::path report_path = files.dataset.parent_path() / "report.json";
  if (fs::exists(report_path)) {
    auto report = nlohmann::json::parse(read_file(report_path.string()), nullptr, false);
    if (!report.is_discarded() && report.contains("tasks")) {
      std::cout << "\nacceptance:\n";
      for (const auto& t : report["tasks"]) {
        char line[160];
        std::snprintf(line, sizeof line, "  %-20s %6zu accepted / %6zu attempts (%.1f%%)\n",
                      t.value("task_id", "?").c_str(), t.value("accepted", std::size_t{0}),
                      t.value("attempts", std::size_t{0}), 100.0 * t.value("acceptance_rate", 0.0));
        std::cout << line;
      }
    }
  }
  std::cout << "\ntraining recipe:\n" << manifest.value("training_recipe", nlohmann::json::object()).dump(2) << "\n";
  return status;
}

int cmd_sweep(const RunFlags& flags, const std::vector<std::size_t>& ns) {
  RunConfig base = resolve_config(flags);
  auto planner = make_planner(base.planner);
  std::vector<std::map<TaskId, std::vector<std::string>>> datasets;
  int status = kExitOk;
  for (std::size_t n : ns) {
    RunConfig c = base;
    c.n_per_task = n;
    c.max_attempts_per_task.reset();
    c.output_dir = (fs::path(base.output_dir) / ("N" + std::to_string(n))).string();
    const GenerateResult r = generate(c, *planner);
    write_generate_outputs(c.output_dir, r);
    std::size_t attempts = 0;
    for (const auto& t : r.reports) attempts += t.attempts;
    std::cout << "N=" << n << ": " << r.aggregate.records.size() << " records, " << attempts << " attempts -> "
              << c.output_dir << "\n";
    status = std::max(status, generate_exit(r));
    std::map<TaskId, std::vector<std::string>> per_task;
    for (const auto& rec : r.aggregate.records) per_task[rec.task_id].push_back(record_to_json_line(rec));
    datasets.push_back(std::move(per_task));
  }
  // Monotone-N: per task, the smaller run's records are a prefix of the larger run's.
  bool prefix_ok = true;
  for (std::size_t a = 0; a + 1 < ns.size(); ++a) {
    for (const auto& [task, recs] : datasets[a]) {
      const auto& big = datasets[a + 1][task];
      const bool ok = recs.size() <= big.size() && std::equal(recs.begin(), recs.end(), big.begin());
      if (!ok) {
        std::cerr << "prefix violation: N=" << ns[a] << " " << to_string(task) << " is not a prefix of N=" << ns[a + 1]
                  << "\n";
        prefix_ok = false;
      }
    }
  }
  std::cout << "monotone-N prefix property: " << (prefix_ok ? "holds" : "VIOLATED") << "\n";
  if (!prefix_ok) return kExitIntegrity;
  return status;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Verified plan-dataset bootstrapping on a kinematic tabletop simulator"};
  app.require_subcommand(1);

  RunFlags gen_flags;
  auto* gen = app.add_subcommand("generate", "Collect N verified (prompt, plan) records per task");
  add_run_flags(gen, gen_flags, true, false);

  RunFlags eval_flags;
  auto* eval = app.add_subcommand("evaluate", "Success rate per task on held-out evaluation seeds");
  add_run_flags(eval, eval_flags, false, true);

  RunFlags sweep_flags;
  std::vector<std::size_t> ns = {500, 1000, 2000, 4000};
  auto* sweep = app.add_subcommand("sweep", "Run generate for several N and check the prefix property");
  add_run_flags(sweep, sweep_flags, false, false);
  sweep->add_option("--ns", ns, "Dataset sizes per task")->delimiter(',');

  std::string replay_path;
  long long replay_index = -1;
  bool replay_all = false;
  bool replay_steps = false;
  std::string replay_config;
  auto* rep = app.add_subcommand("replay", "Re-execute dataset records and check they still verify");
  rep->add_option("dataset", replay_path, "dataset.jsonl or its directory")->required();
  auto* idx = rep->add_option("--index", replay_index, "Record index (0-based)");
  auto* all = rep->add_flag("--all", replay_all, "Replay every record");
  idx->excludes(all);
  rep->add_flag("--steps", replay_steps, "Print the state after every command (default for --index)");
  rep->add_option("--config", replay_config, "Run config whose simulator settings to replay under");

  std::string inspect_path;
  auto* ins = app.add_subcommand("inspect", "Summarize a dataset and check it against its manifest");
  ins->add_option("dataset", inspect_path, "dataset.jsonl or its directory")->required();

  app.add_subcommand("tasks", "Print the task catalog as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_flags);
    if (eval->parsed()) return cmd_evaluate(eval_flags);
    if (sweep->parsed()) {
      if (ns.empty()) throw UsageError{"--ns needs at least one size"};
      return cmd_sweep(sweep_flags, ns);
    }
    if (rep->parsed()) {
      if (!replay_all && idx->count() == 0) throw UsageError{"replay needs --index <i> or --all"};
      return cmd_replay(replay_path, replay_index, replay_all, replay_steps, replay_config);
    }
    if (ins->parsed()) return cmd_inspect(inspect_path);
    std::cout << task_manifest_json();
    return kExitOk;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.message << "\n";
    return kExitUsage;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIntegrity;
  }
}

}  // namespace simboot
