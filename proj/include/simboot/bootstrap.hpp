#pragma once

// Verified data collection: randomize -> prompt -> plan -> parse -> execute ->
// verify, keeping only successful episodes, plus dataset aggregation, replay
// and success-rate evaluation.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simboot/config.hpp"
#include "simboot/model.hpp"
#include "simboot/planner.hpp"
#include "simboot/prompt.hpp"
#include "simboot/sim.hpp"
#include "simboot/tasks.hpp"

namespace simboot {

// ---------------------------------------------------------------------------
// Seeds. Collection seeds have the top bit clear, evaluation seeds have it
// set, so the two ranges can never overlap.

inline constexpr std::uint64_t kEvaluationSeedBit = std::uint64_t{1} << 63;

std::uint64_t collection_seed(std::uint64_t master, TaskId task, std::uint64_t attempt);
std::uint64_t evaluation_seed(std::uint64_t master, TaskId task, std::uint64_t episode);
inline bool is_evaluation_seed(std::uint64_t seed) { return (seed & kEvaluationSeedBit) != 0; }

// ---------------------------------------------------------------------------
// Episodes

struct EpisodeContext {
  const PromptTemplate& prompt_template;
  Planner& planner;
  const SimConfig& sim;
  const PerceptionSettings* perception = nullptr;  // set: planner sees the fused estimate
};

/// One full cycle for (task, seed). Never throws for planner, parse or
/// simulation failures; they are reported through the verdict.
Episode run_episode(TaskId task, std::uint64_t seed, const EpisodeContext& ctx);

/// The scene the planner is shown for `instance` (truth, or the fusion of
/// noisy views seeded from the instance seed).
EnvState observed_state(const TaskInstance& instance, const PerceptionSettings* perception);

/// Runs fn(0..n-1) on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Collection

struct TrainingRecipe {
  int epochs = 5;
  int effective_batch_size = 24;
  int adapter_rank = 64;
  int adapter_scaling = 16;
  double learning_rate = 2e-5;
  std::string schedule = "cosine";
  std::string objective = "prompt-completion loss";

  ordered_json to_json() const;
};

struct TaskReport {
  TaskId task = TaskId::PutBlock;
  std::size_t target = 0;
  std::size_t attempts = 0;
  std::size_t successes = 0;  // includes duplicates
  std::size_t parse_failures = 0;
  std::size_t execution_failures = 0;
  std::size_t verification_failures = 0;
  std::size_t planner_errors = 0;
  std::size_t duplicates = 0;  // successes not kept
  std::size_t accepted = 0;
  double wall_clock_s = 0.0;
  bool budget_exhausted = false;
  bool aborted = false;  // too many consecutive planner errors

  double acceptance_rate() const { return attempts == 0 ? 0.0 : double(accepted) / double(attempts); }
  bool conserved() const {
    return attempts == successes + parse_failures + execution_failures + verification_failures + planner_errors;
  }
  ordered_json to_json() const;
};

struct TaskDataset {
  TaskId task = TaskId::PutBlock;
  std::vector<SftRecord> records;
};

enum class CollectErrorKind { AttemptBudgetExhausted, PlannerAborted };

struct CollectResult {
  TaskDataset dataset;
  TaskReport report;
  std::optional<CollectErrorKind> error;  // dataset is still the partial result
  std::vector<Episode> episodes;          // every committed attempt, in order
};

/// Collects up to N verified records for one task. Attempts run in batches on
/// the worker pool and are committed in attempt order, so the output does not
/// depend on the number of workers.
CollectResult collect_task(const TaskSpec& spec, const RunConfig& config, Planner& planner);

std::string record_to_json_line(const SftRecord& record);
Result<SftRecord, std::string> record_from_json_line(std::string_view line);

struct AggregateError {
  std::string message;
};

struct Aggregate {
  std::vector<SftRecord> records;
  std::string dataset_text;  // JSON lines
  ordered_json manifest;
};

/// Concatenates per-task datasets (in the given order) into one dataset plus
/// manifest. Duplicate task ids are rejected.
Result<Aggregate, AggregateError> aggregate(std::span<const TaskDataset> datasets, const RunConfig& config,
                                            const std::vector<std::string>& warnings = {});

struct GenerateResult {
  std::vector<TaskReport> reports;
  std::vector<CollectResult> collections;
  Aggregate aggregate;
  bool complete = true;  // every task reached N
  bool aborted = false;  // a task stopped on planner errors
};

GenerateResult generate(const RunConfig& config, Planner& planner);

/// Writes dataset.jsonl, manifest.json, report.json, report.txt and
/// episodes.jsonl into `dir`, each via write-temp-then-rename.
void write_generate_outputs(const std::string& dir, const GenerateResult& result);

void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

std::string report_table(const std::vector<TaskReport>& reports);

// ---------------------------------------------------------------------------
// Replay

enum class ReplayErrorKind { ConfigMismatch };

struct ReplayError {
  ReplayErrorKind kind = ReplayErrorKind::ConfigMismatch;
  std::string message;
};

struct ReplayOutcome {
  EpisodeVerdict verdict = EpisodeVerdict::TaskFailure;
  std::string reason;
  std::optional<TaskInstance> instance;
  std::vector<EnvState> states;  // after each executed command
  std::vector<TraceStep> trace;
};

/// Re-runs a record from (task_id, seed) under `sim`, which must equal the
/// dataset's `snapshot`. Success requires the verifier to accept and the final
/// state digest to match the stored one.
Result<ReplayOutcome, ReplayError> replay(const SftRecord& record, const SimConfig& sim, const SimConfig& snapshot);

// ---------------------------------------------------------------------------
// Evaluation

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval at ~95% (z = 1.96).
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct EvalRow {
  TaskId task = TaskId::PutBlock;
  std::size_t episodes = 0;
  std::size_t successes = 0;
  std::size_t task_failures = 0;
  std::size_t parse_failures = 0;
  std::size_t execution_failures = 0;
  std::size_t planner_errors = 0;
  double rate = 0.0;
  Interval ci;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double average = 0.0;  // mean of the per-task rates
  Interval average_ci;   // Wilson interval on the pooled episodes
  bool noisy = false;
  PerceptionSettings perception;
  std::string planner;
  double wall_clock_s = 0.0;
  std::vector<Episode> episodes;  // task-major, episode order

  ordered_json to_json() const;
  std::string table() const;
};

/// M episodes per task on evaluation seeds. Seeds depend only on (master seed,
/// task, episode), so truth and noisy runs see the same scenes.
EvalReport evaluate(const RunConfig& config, Planner& planner);

}  // namespace simboot
