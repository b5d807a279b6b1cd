#include "simboot/bootstrap.hpp"

#include <atomic>
#include <mutex>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "simboot/dsl.hpp"
#include "simboot/rng.hpp"

namespace simboot {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kCollectTag = 0xc011ec7;
constexpr std::uint64_t kEvaluateTag = 0xe7a1;
constexpr std::uint64_t kPerceptionTag = 0x9e2c;
constexpr const char* kDatasetFormat = "simboot-dataset/1";

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

PromptTemplate template_of(const RunConfig& config) {
  return config.template_text.empty() ? PromptTemplate::default_template() : PromptTemplate(config.template_text);
}

std::string diagnostics_text(const std::vector<dsl::ParseDiagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) {
    if (!out.empty()) out += "; ";
    out += dsl::format(d);
  }
  return out;
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

ordered_json episode_log_json(const Episode& e) {
  return {
      {"task_id", to_string(e.task_id)},
      {"seed", e.seed},
      {"verdict", to_string(e.verdict)},
      {"reason", e.reason},
      {"planner_error", e.planner_error},
      {"raw_completion", e.raw_completion},
  };
}

}  // namespace

std::uint64_t collection_seed(std::uint64_t master, TaskId task, std::uint64_t attempt) {
  return derive_seed(master, {kCollectTag, static_cast<std::uint64_t>(task), attempt}) & ~kEvaluationSeedBit;
}

std::uint64_t evaluation_seed(std::uint64_t master, TaskId task, std::uint64_t episode) {
  return derive_seed(master, {kEvaluateTag, static_cast<std::uint64_t>(task), episode}) | kEvaluationSeedBit;
}

EnvState observed_state(const TaskInstance& instance, const PerceptionSettings* perception) {
  if (perception == nullptr) return instance.initial_state;
  const auto views = observe(instance.initial_state, perception->model, perception->views,
                             derive_seed(instance.seed, {kPerceptionTag}));
  auto fused = fuse(views, instance.initial_state);
  if (!fused) throw std::logic_error("fuse: " + fused.error().message);
  return std::move(fused).value();
}

Episode run_episode(TaskId task, std::uint64_t seed, const EpisodeContext& ctx) {
  Episode ep;
  ep.task_id = task;
  ep.seed = seed;
  auto instance = randomize(task_spec(task), seed);
  if (!instance) {
    ep.verdict = EpisodeVerdict::ExecutionError;
    ep.reason = "randomize: " + instance.error().message;
    return ep;
  }
  ep.initial_state = instance->initial_state;

  const EnvState observed = observed_state(*instance, ctx.perception);
  auto prompt = build_prompt(ctx.prompt_template, *instance, observed);
  if (!prompt) {
    ep.verdict = EpisodeVerdict::ParseError;
    ep.reason = "prompt: " + prompt.error().message;
    return ep;
  }
  ep.prompt = std::move(prompt).value();

  auto completion = ctx.planner.complete(PlanningRequest{ep.prompt, *instance, observed, seed});
  if (!completion) {
    const PlannerError& err = completion.error();
    ep.planner_error = true;
    ep.verdict = err.kind == PlannerErrorKind::Timeout ? EpisodeVerdict::Timeout : EpisodeVerdict::ParseError;
    ep.reason = "planner " + std::string(to_string(err.kind)) + ": " + err.message;
    return ep;
  }
  ep.raw_completion = std::move(completion).value();

  auto plan = dsl::parse(ep.raw_completion);
  if (!plan) {
    ep.verdict = EpisodeVerdict::ParseError;
    ep.reason = "parse: " + diagnostics_text(plan.error());
    return ep;
  }
  ep.plan = std::move(plan).value();

  auto run = execute(instance->initial_state, *ep.plan, ctx.sim);
  if (!run) {
    const SimError& err = run.error();
    ep.verdict = EpisodeVerdict::ExecutionError;
    ep.reason = "command " + std::to_string(err.command_index + 1) + ": " + std::string(to_string(err.kind)) +
                ": " + err.message;
    return ep;
  }
  for (const auto& t : run->trace) ep.trace.push_back({t.command_index, t.digest});
  ep.final_digest = state_digest(run->final_state);

  const Verdict v = verify(*instance, run->final_state, run->states);
  ep.verdict = v.success ? EpisodeVerdict::Success : EpisodeVerdict::TaskFailure;
  ep.reason = v.reason;
  return ep;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

ordered_json TrainingRecipe::to_json() const {
  return {
      {"epochs", epochs},
      {"effective_batch_size", effective_batch_size},
      {"adapter", "LoRA"},
      {"adapter_rank", adapter_rank},
      {"adapter_scaling", adapter_scaling},
      {"learning_rate", learning_rate},
      {"schedule", schedule},
      {"objective", objective},
  };
}

ordered_json TaskReport::to_json() const {
  return {
      {"task_id", to_string(task)},
      {"target", target},
      {"attempts", attempts},
      {"successes", successes},
      {"parse_failures", parse_failures},
      {"execution_failures", execution_failures},
      {"verification_failures", verification_failures},
      {"planner_errors", planner_errors},
      {"duplicates", duplicates},
      {"accepted", accepted},
      {"acceptance_rate", acceptance_rate()},
      {"wall_clock_s", wall_clock_s},
      {"budget_exhausted", budget_exhausted},
      {"aborted", aborted},
  };
}

CollectResult collect_task(const TaskSpec& spec, const RunConfig& config, Planner& planner) {
  config.validate();
  const auto start = Clock::now();
  const PromptTemplate tmpl = template_of(config);
  const EpisodeContext ctx{tmpl, planner, config.sim, config.noisy_state ? &config.perception : nullptr};

  CollectResult out;
  out.dataset.task = spec.id;
  TaskReport& report = out.report;
  report.task = spec.id;
  report.target = config.n_per_task;

  std::set<std::pair<Digest, Digest>> seen;
  std::size_t consecutive_planner_errors = 0;
  const std::size_t budget = config.attempt_budget();
  const std::size_t batch = std::max<std::size_t>(1, config.parallelism * 4);
  std::size_t next_attempt = 0;
  bool done = false;

  while (!done && next_attempt < budget) {
    const std::size_t count = std::min(batch, budget - next_attempt);
    std::vector<Episode> episodes(count);
    parallel_for(count, config.parallelism, [&](std::size_t i) {
      const std::uint64_t seed = collection_seed(config.master_seed, spec.id, next_attempt + i);
      if (is_evaluation_seed(seed)) throw std::logic_error("collection seed falls in the evaluation range");
      episodes[i] = run_episode(spec.id, seed, ctx);
    });
    next_attempt += count;

    // Single serialized writer: commit in attempt order.
    for (auto& ep : episodes) {
      ++report.attempts;
      if (ep.planner_error) {
        ++report.planner_errors;
        ++consecutive_planner_errors;
      } else {
        consecutive_planner_errors = 0;
        switch (ep.verdict) {
          case EpisodeVerdict::Success: ++report.successes; break;
          case EpisodeVerdict::ParseError:
          case EpisodeVerdict::Timeout: ++report.parse_failures; break;
          case EpisodeVerdict::ExecutionError: ++report.execution_failures; break;
          case EpisodeVerdict::TaskFailure: ++report.verification_failures; break;
        }
      }
      if (ep.verdict == EpisodeVerdict::Success) {
        const std::string completion = dsl::pretty_print(*ep.plan);
        if (seen.insert({sha256(ep.prompt), sha256(completion)}).second) {
          out.dataset.records.push_back({ep.prompt, completion, spec.id, ep.seed, *ep.final_digest});
          ++report.accepted;
        } else {
          ++report.duplicates;
        }
      }
      out.episodes.push_back(std::move(ep));
      if (report.accepted >= config.n_per_task) {
        done = true;
        break;
      }
      if (consecutive_planner_errors >= config.max_consecutive_planner_errors) {
        report.aborted = true;
        out.error = CollectErrorKind::PlannerAborted;
        done = true;
        break;
      }
    }
  }
  if (!out.error && report.accepted < config.n_per_task) {
    report.budget_exhausted = true;
    out.error = CollectErrorKind::AttemptBudgetExhausted;
  }
  report.wall_clock_s = seconds_since(start);
  return out;
}

std::string record_to_json_line(const SftRecord& r) {
  ordered_json j = {
      {"prompt", r.prompt},
      {"completion", r.completion},
      {"task_id", to_string(r.task_id)},
      {"seed", r.seed},
      {"verifier_digest", r.verifier_digest.hex()},
  };
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

Result<SftRecord, std::string> record_from_json_line(std::string_view line) {
  auto doc = nlohmann::json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return unexpected(std::string("record is not a JSON object"));
  static const std::set<std::string> kFields = {"prompt", "completion", "task_id", "seed", "verifier_digest"};
  for (const auto& item : doc.items()) {
    if (!kFields.count(item.key())) return unexpected("unexpected field '" + item.key() + "'");
  }
  try {
    SftRecord r;
    r.prompt = doc.at("prompt").get<std::string>();
    r.completion = doc.at("completion").get<std::string>();
    const auto task = task_from_string(doc.at("task_id").get<std::string>());
    if (!task) return unexpected("unknown task_id '" + doc.at("task_id").get<std::string>() + "'");
    r.task_id = *task;
    if (!doc.at("seed").is_number_unsigned()) return unexpected(std::string("seed must be an unsigned integer"));
    r.seed = doc.at("seed").get<std::uint64_t>();
    const auto digest = Digest::from_hex(doc.at("verifier_digest").get<std::string>());
    if (!digest) return unexpected(std::string("verifier_digest is not a sha256 hex string"));
    r.verifier_digest = *digest;
    return r;
  } catch (const nlohmann::json::exception& e) {
    return unexpected(std::string("malformed record: ") + e.what());
  }
}

Result<Aggregate, AggregateError> aggregate(std::span<const TaskDataset> datasets, const RunConfig& config,
                                            const std::vector<std::string>& warnings) {
  if (datasets.empty()) return unexpected(AggregateError{"aggregate needs at least one dataset"});
  std::set<TaskId> ids;
  for (const auto& d : datasets) {
    if (!ids.insert(d.task).second) {
      return unexpected(AggregateError{"duplicate dataset for task '" + std::string(to_string(d.task)) + "'"});
    }
  }
  Aggregate agg;
  ordered_json tasks = ordered_json::array();
  bool complete = true;
  for (const auto& d : datasets) {
    std::string text;
    for (const auto& r : d.records) {
      if (r.task_id != d.task) return unexpected(AggregateError{"record task id does not match its dataset"});
      text += record_to_json_line(r);
      text.push_back('\n');
      agg.records.push_back(r);
    }
    complete = complete && d.records.size() >= config.n_per_task;
    tasks.push_back({{"task_id", to_string(d.task)},
                     {"records", d.records.size()},
                     {"target", config.n_per_task},
                     {"sha256", sha256(text).hex()}});
    agg.dataset_text += text;
  }
  agg.manifest = {
      {"format", kDatasetFormat},
      {"dataset_file", "dataset.jsonl"},
      {"dataset_sha256", sha256(agg.dataset_text).hex()},
      {"total_records", agg.records.size()},
      {"complete", complete},
      {"warnings", warnings},
      {"tasks", tasks},
      {"training_recipe", TrainingRecipe{}.to_json()},
      {"config", to_json(config)},
  };
  return agg;
}

GenerateResult generate(const RunConfig& config, Planner& planner) {
  config.validate();
  GenerateResult out;
  std::vector<TaskDataset> datasets;
  std::vector<std::string> warnings;
  for (TaskId task : config.tasks) {
    CollectResult c = collect_task(task_spec(task), config, planner);
    const TaskReport& r = c.report;
    if (c.error == CollectErrorKind::AttemptBudgetExhausted) {
      warnings.push_back(std::string(to_string(task)) + ": attempt budget exhausted after " +
                         std::to_string(r.attempts) + " attempts with " + std::to_string(r.accepted) + " of " +
                         std::to_string(r.target) + " records (partial dataset)");
      out.complete = false;
    } else if (c.error == CollectErrorKind::PlannerAborted) {
      warnings.push_back(std::string(to_string(task)) + ": stopped after " +
                         std::to_string(config.max_consecutive_planner_errors) + " consecutive planner errors");
      out.complete = false;
      out.aborted = true;
    }
    datasets.push_back(c.dataset);
    out.reports.push_back(r);
    out.collections.push_back(std::move(c));
    if (out.aborted) break;
  }
  auto agg = aggregate(datasets, config, warnings);
  if (!agg) throw std::logic_error(agg.error().message);
  out.aggregate = std::move(agg).value();
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string report_table(const std::vector<TaskReport>& reports) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %8s %8s %8s %7s %7s %7s %7s %6s %9s %8s\n", "task", "attempts", "accepted",
                "success", "parse", "exec", "verify", "planner", "dups", "accept%", "time_s");
  out += line;
  std::size_t attempts = 0;
  std::size_t accepted = 0;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-20s %8zu %8zu %8zu %7zu %7zu %7zu %7zu %6zu %9s %8.2f%s\n",
                  std::string(to_string(r.task)).c_str(), r.attempts, r.accepted, r.successes, r.parse_failures,
                  r.execution_failures, r.verification_failures, r.planner_errors, r.duplicates,
                  percent(r.acceptance_rate()).c_str(), r.wall_clock_s,
                  r.budget_exhausted ? "  (budget exhausted)" : (r.aborted ? "  (aborted)" : ""));
    out += line;
    attempts += r.attempts;
    accepted += r.accepted;
  }
  std::snprintf(line, sizeof line, "%-20s %8zu %8zu %60s\n", "total", attempts, accepted,
                (percent(attempts ? double(accepted) / double(attempts) : 0.0) + "%").c_str());
  out += line;
  return out;
}

void write_generate_outputs(const std::string& dir, const GenerateResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);
  write_file_atomic((base / "dataset.jsonl").string(), result.aggregate.dataset_text);
  write_file_atomic((base / "manifest.json").string(), result.aggregate.manifest.dump(2) + "\n");

  ordered_json tasks = ordered_json::array();
  for (const auto& r : result.reports) tasks.push_back(r.to_json());
  ordered_json report = {
      {"dataset_sha256", result.aggregate.manifest["dataset_sha256"]},
      {"complete", result.complete},
      {"aborted", result.aborted},
      {"tasks", tasks},
  };
  write_file_atomic((base / "report.json").string(), report.dump(2) + "\n");
  write_file_atomic((base / "report.txt").string(),
                    report_table(result.reports) + "dataset sha256: " +
                        result.aggregate.manifest["dataset_sha256"].get<std::string>() + "\n");

  std::string log;
  for (const auto& c : result.collections) {
    for (const auto& e : c.episodes) {
      log += episode_log_json(e).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
      log.push_back('\n');
    }
  }
  write_file_atomic((base / "episodes.jsonl").string(), log);
}

Result<ReplayOutcome, ReplayError> replay(const SftRecord& record, const SimConfig& sim, const SimConfig& snapshot) {
  if (!(sim == snapshot)) {
    return unexpected(ReplayError{ReplayErrorKind::ConfigMismatch,
                                  "simulator config differs from the dataset's config snapshot"});
  }
  ReplayOutcome out;
  auto instance = randomize(task_spec(record.task_id), record.seed);
  if (!instance) {
    out.verdict = EpisodeVerdict::ExecutionError;
    out.reason = "randomize: " + instance.error().message;
    return out;
  }
  out.instance = *instance;
  auto plan = dsl::parse(record.completion);
  if (!plan) {
    out.verdict = EpisodeVerdict::ParseError;
    out.reason = "parse: " + diagnostics_text(plan.error());
    return out;
  }
  auto run = execute(instance->initial_state, *plan, sim);
  if (!run) {
    out.verdict = EpisodeVerdict::ExecutionError;
    out.reason = "command " + std::to_string(run.error().command_index + 1) + ": " +
                 std::string(to_string(run.error().kind)) + ": " + run.error().message;
    return out;
  }
  out.states = run->states;
  out.trace = run->trace;
  const Verdict v = verify(*instance, run->final_state, run->states);
  if (!v.success) {
    out.verdict = EpisodeVerdict::TaskFailure;
    out.reason = v.reason;
    return out;
  }
  if (!(state_digest(run->final_state) == record.verifier_digest)) {
    out.verdict = EpisodeVerdict::TaskFailure;
    out.reason = "final state digest differs from the recorded verifier digest";
    return out;
  }
  out.verdict = EpisodeVerdict::Success;
  return out;
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = double(trials);
  const double p = double(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

EvalReport evaluate(const RunConfig& config, Planner& planner) {
  config.validate();
  if (config.episodes_per_task < 1) throw ModelError("episodes_per_task must be >= 1");
  const auto start = Clock::now();
  const PromptTemplate tmpl = template_of(config);
  const EpisodeContext ctx{tmpl, planner, config.sim, config.noisy_state ? &config.perception : nullptr};

  EvalReport report;
  report.noisy = config.noisy_state;
  report.perception = config.perception;
  report.planner = planner_spec(config.planner);
  std::size_t pooled_successes = 0;
  std::size_t pooled_trials = 0;
  double rate_sum = 0.0;
  for (TaskId task : config.tasks) {
    std::vector<Episode> episodes(config.episodes_per_task);
    parallel_for(episodes.size(), config.parallelism, [&](std::size_t i) {
      const std::uint64_t seed = evaluation_seed(config.master_seed, task, i);
      if (!is_evaluation_seed(seed)) throw std::logic_error("evaluation seed falls in the collection range");
      episodes[i] = run_episode(task, seed, ctx);
    });
    EvalRow row;
    row.task = task;
    row.episodes = episodes.size();
    for (const auto& e : episodes) {
      if (e.planner_error) {
        ++row.planner_errors;
        continue;
      }
      switch (e.verdict) {
        case EpisodeVerdict::Success: ++row.successes; break;
        case EpisodeVerdict::TaskFailure: ++row.task_failures; break;
        case EpisodeVerdict::ParseError:
        case EpisodeVerdict::Timeout: ++row.parse_failures; break;
        case EpisodeVerdict::ExecutionError: ++row.execution_failures; break;
      }
    }
    row.rate = double(row.successes) / double(row.episodes);
    row.ci = wilson_interval(row.successes, row.episodes);
    rate_sum += row.rate;
    pooled_successes += row.successes;
    pooled_trials += row.episodes;
    report.rows.push_back(row);
    for (auto& e : episodes) report.episodes.push_back(std::move(e));
  }
  report.average = rate_sum / double(report.rows.size());
  report.average_ci = wilson_interval(pooled_successes, pooled_trials);
  report.wall_clock_s = seconds_since(start);
  return report;
}

ordered_json EvalReport::to_json() const {
  ordered_json rows_json = ordered_json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"task_id", to_string(r.task)},
                         {"episodes", r.episodes},
                         {"successes", r.successes},
                         {"task_failures", r.task_failures},
                         {"parse_failures", r.parse_failures},
                         {"execution_failures", r.execution_failures},
                         {"planner_errors", r.planner_errors},
                         {"success_rate", r.rate},
                         {"ci95", {r.ci.low, r.ci.high}}});
  }
  ordered_json doc = {
      {"planner", planner},
      {"state", noisy ? "noisy" : "truth"},
      {"rows", rows_json},
      {"average_success_rate", average},
      {"average_ci95", {average_ci.low, average_ci.high}},
      {"wall_clock_s", wall_clock_s},
  };
  if (noisy) {
    const NoiseModel& m = perception.model;
    doc["noise"] = {{"sigma_pos", m.sigma_pos},
                    {"sigma_dim", m.sigma_dim},
                    {"sigma_yaw", m.sigma_yaw},
                    {"outlier_probability", m.outlier_probability},
                    {"outlier_offset_range", m.outlier_offset_range},
                    {"views", perception.views}};
  }
  return doc;
}

std::string EvalReport::table() const {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "Planner: %s   State: %s\n", planner.c_str(),
                noisy ? "noisy (median-fused estimate)" : "ground truth");
  out += line;
  if (noisy) {
    const NoiseModel& m = perception.model;
    std::snprintf(line, sizeof line,
                  "Noise: sigma_pos=%.4f m, sigma_dim=%.4f m, sigma_yaw=%.4f rad, outliers p=%.2f (+-%.2f m), "
                  "views=%zu\n",
                  m.sigma_pos, m.sigma_dim, m.sigma_yaw, m.outlier_probability, m.outlier_offset_range,
                  perception.views);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-20s %8s %12s %16s\n", "Task", "Episodes", "Success (%)", "95% CI (Wilson)");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-20s %8zu %12s %16s\n", std::string(to_string(r.task)).c_str(), r.episodes,
                  percent(r.rate).c_str(), ("[" + percent(r.ci.low) + ", " + percent(r.ci.high) + "]").c_str());
    out += line;
  }
  std::snprintf(line, sizeof line, "%-20s %8s %12s %16s\n", "Average", "", percent(average).c_str(),
                ("[" + percent(average_ci.low) + ", " + percent(average_ci.high) + "]").c_str());
  out += line;
  return out;
}

}  // namespace simboot
