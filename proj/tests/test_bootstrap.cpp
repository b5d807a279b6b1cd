#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "harness.hpp"
#include "json.hpp"
#include "simboot/bootstrap.hpp"
#include "simboot/dsl.hpp"

using namespace simboot;

namespace {

RunConfig config_for(std::vector<TaskId> tasks, std::size_t n, const std::string& planner = "oracle",
                     std::uint64_t seed = 11) {
  RunConfig c;
  c.tasks = std::move(tasks);
  c.n_per_task = n;
  c.master_seed = seed;
  EXPECT_TRUE(apply_planner_spec(planner, c.planner)) << planner;
  return c;
}

CollectResult collect(TaskId task, const RunConfig& c) {
  auto planner = make_planner(c.planner);
  return collect_task(task_spec(task), c, *planner);
}

// Replaces the grasp waypoint (the move right before the first close_gripper)
// of a canonical plan with the origin.
std::string zero_grasp_waypoint(const std::string& completion) {
  const std::size_t at = completion.rfind("move_gripper(", completion.find("close_gripper()"));
  const std::size_t end = completion.find('\n', at);
  return completion.substr(0, at) + "move_gripper(0.000000, 0.000000, 0.000000, 0.000000)" + completion.substr(end);
}

}  // namespace

TEST(Collect, OracleFillsEveryRecordOnFirstAttempts) {
  const RunConfig c = config_for({TaskId::PutBlock}, 50);
  const CollectResult r = collect(TaskId::PutBlock, c);
  EXPECT_FALSE(r.error.has_value());
  EXPECT_EQ(r.dataset.records.size(), 50u);
  EXPECT_EQ(r.report.attempts, 50u);
  EXPECT_DOUBLE_EQ(r.report.acceptance_rate(), 1.0);
  EXPECT_TRUE(r.report.conserved());
  for (const auto& rec : r.dataset.records) {
    EXPECT_EQ(rec.task_id, TaskId::PutBlock);
    EXPECT_FALSE(is_evaluation_seed(rec.seed));
    EXPECT_EQ(dsl::pretty_print(harness::parse_or_throw(rec.completion)), rec.completion);
  }
}

TEST(Collect, DegradedNeedsMoreAttempts) {
  const RunConfig c = config_for({TaskId::CloseJar}, 50, "oracle-degraded:0.3");
  const CollectResult r = collect(TaskId::CloseJar, c);
  EXPECT_FALSE(r.error.has_value());
  EXPECT_EQ(r.dataset.records.size(), 50u);
  EXPECT_TRUE(r.report.conserved());
  // Expected 50 / 0.7 ~ 71 attempts.
  EXPECT_GE(r.report.attempts, 58u);
  EXPECT_LE(r.report.attempts, 95u);
  EXPECT_EQ(r.report.attempts - r.report.successes,
            r.report.parse_failures + r.report.execution_failures + r.report.verification_failures);
}

TEST(Collect, BudgetExhaustionKeepsPartialResult) {
  RunConfig c = config_for({TaskId::PutBlock}, 5, "oracle-degraded:1");
  c.max_attempts_per_task = 40;
  const CollectResult r = collect(TaskId::PutBlock, c);
  ASSERT_TRUE(r.error.has_value());
  EXPECT_EQ(*r.error, CollectErrorKind::AttemptBudgetExhausted);
  EXPECT_TRUE(r.dataset.records.empty());
  EXPECT_EQ(r.report.attempts, 40u);
  EXPECT_TRUE(r.report.budget_exhausted);
  EXPECT_TRUE(r.report.conserved());
}

TEST(Collect, DeterministicAcrossParallelism) {
  RunConfig c = config_for({TaskId::StackBlocks}, 30, "oracle-degraded:0.3");
  const CollectResult a = collect(TaskId::StackBlocks, c);
  c.parallelism = 3;
  const CollectResult b = collect(TaskId::StackBlocks, c);
  EXPECT_EQ(a.dataset.records, b.dataset.records);
  EXPECT_EQ(a.report.attempts, b.report.attempts);
}

TEST(Collect, MonotoneInN) {
  for (auto task : {TaskId::PutBlock, TaskId::EmptyContainer, TaskId::InsertInPeg}) {
    const CollectResult small = collect(task, config_for({task}, 10, "oracle-degraded:0.3"));
    const CollectResult big = collect(task, config_for({task}, 25, "oracle-degraded:0.3"));
    ASSERT_LE(small.dataset.records.size(), big.dataset.records.size());
    EXPECT_TRUE(std::equal(small.dataset.records.begin(), small.dataset.records.end(), big.dataset.records.begin()))
        << to_string(task);
  }
}

TEST(Seeds, CollectionAndEvaluationRangesAreDisjoint) {
  std::set<std::uint64_t> collection;
  for (auto task : kAllTasks) {
    for (std::uint64_t i = 0; i < 500; ++i) {
      const std::uint64_t s = collection_seed(3, task, i);
      EXPECT_FALSE(is_evaluation_seed(s));
      collection.insert(s);
      EXPECT_TRUE(is_evaluation_seed(evaluation_seed(3, task, i)));
    }
  }
  EXPECT_EQ(collection.size(), 9u * 500u);
}

TEST(Aggregate, CountsIdentityAndDigest) {
  const RunConfig c = config_for({TaskId::PutBlock, TaskId::OpenBottle}, 8);
  auto planner = make_planner(c.planner);
  const GenerateResult g = generate(c, *planner);
  EXPECT_TRUE(g.complete);
  EXPECT_EQ(g.aggregate.records.size(), 16u);
  EXPECT_EQ(g.aggregate.manifest["total_records"].get<std::size_t>(), 16u);

  // A single dataset aggregates to itself.
  std::vector<TaskDataset> one = {g.collections[0].dataset};
  const Aggregate single = aggregate(one, c).value();
  EXPECT_EQ(single.records, one[0].records);

  // The digest changes iff a record changes.
  std::vector<TaskDataset> both = {g.collections[0].dataset, g.collections[1].dataset};
  const std::string base = aggregate(both, c).value().manifest["dataset_sha256"];
  EXPECT_EQ(aggregate(both, c).value().manifest["dataset_sha256"], base);
  both[1].records[3].completion += "open_gripper()\n";
  EXPECT_NE(aggregate(both, c).value().manifest["dataset_sha256"], base);

  // Duplicate task ids are rejected.
  std::vector<TaskDataset> dup = {g.collections[0].dataset, g.collections[0].dataset};
  EXPECT_FALSE(aggregate(dup, c).has_value());
}

TEST(Replay, EveryRecordReplaysAndTamperingIsCaught) {
  const RunConfig c = config_for({TaskId::MeatOffGrill, TaskId::BasketballInHoop}, 10);
  auto planner = make_planner(c.planner);
  const GenerateResult g = generate(c, *planner);
  for (const auto& rec : g.aggregate.records) {
    const auto out = replay(rec, c.sim, c.sim);
    ASSERT_TRUE(out.has_value());
    EXPECT_EQ(out->verdict, EpisodeVerdict::Success) << out->reason;
  }
  SftRecord bad = g.aggregate.records[0];
  bad.completion = zero_grasp_waypoint(bad.completion);
  const auto out = replay(bad, c.sim, c.sim).value();
  EXPECT_TRUE(out.verdict == EpisodeVerdict::TaskFailure || out.verdict == EpisodeVerdict::ExecutionError)
      << to_string(out.verdict);

  SftRecord wrong_digest = g.aggregate.records[1];
  wrong_digest.verifier_digest = sha256("something else");
  EXPECT_EQ(replay(wrong_digest, c.sim, c.sim).value().verdict, EpisodeVerdict::TaskFailure);

  SimConfig other = c.sim;
  other.max_aperture += 0.01;
  const auto mismatch = replay(g.aggregate.records[0], other, c.sim);
  ASSERT_FALSE(mismatch.has_value());
  EXPECT_EQ(mismatch.error().kind, ReplayErrorKind::ConfigMismatch);
}

TEST(Records, JsonRoundTripAndStrictness) {
  const RunConfig c = config_for({TaskId::RubbishInBin}, 3);
  const CollectResult r = collect(TaskId::RubbishInBin, c);
  for (const auto& rec : r.dataset.records) {
    const std::string line = record_to_json_line(rec);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_EQ(record_from_json_line(line).value(), rec);
  }
  auto doc = nlohmann::json::parse(record_to_json_line(r.dataset.records[0]));
  doc["extra"] = 1;
  EXPECT_FALSE(record_from_json_line(doc.dump()).has_value());
  doc.erase("extra");
  doc["seed"] = -1;
  EXPECT_FALSE(record_from_json_line(doc.dump()).has_value());
  doc["seed"] = 4;
  doc["task_id"] = "juggle";
  EXPECT_FALSE(record_from_json_line(doc.dump()).has_value());
  doc["task_id"] = "rubbish_in_bin";
  doc["verifier_digest"] = "xyz";
  EXPECT_FALSE(record_from_json_line(doc.dump()).has_value());
  EXPECT_FALSE(record_from_json_line("not json").has_value());
}

TEST(Evaluate, DegradedRateAndPairedNoise) {
  RunConfig c = config_for({TaskId::PutBlock}, 1, "oracle-degraded:0.5", 5);
  c.episodes_per_task = 200;
  auto planner = make_planner(c.planner);
  const EvalReport r = evaluate(c, *planner);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_GE(r.average, 0.4);
  EXPECT_LE(r.average, 0.6);
  EXPECT_LE(r.rows[0].ci.low, r.average);
  EXPECT_GE(r.rows[0].ci.high, r.average);

  RunConfig t = config_for({TaskId::StackBlocks, TaskId::InsertInPeg}, 1, "oracle", 5);
  t.episodes_per_task = 60;
  auto oracle = make_planner(t.planner);
  const EvalReport truth = evaluate(t, *oracle);
  t.noisy_state = true;
  const EvalReport noisy = evaluate(t, *oracle);
  for (std::size_t i = 0; i < truth.rows.size(); ++i) {
    EXPECT_DOUBLE_EQ(truth.rows[i].rate, 1.0);
    EXPECT_LE(noisy.rows[i].rate, truth.rows[i].rate);
  }
  // Paired seeds: both runs see the same scenes.
  for (std::size_t i = 0; i < truth.episodes.size(); ++i) EXPECT_EQ(truth.episodes[i].seed, noisy.episodes[i].seed);
}

TEST(Evaluate, WilsonInterval) {
  const Interval a = wilson_interval(0, 0);
  EXPECT_DOUBLE_EQ(a.low, 0.0);
  EXPECT_DOUBLE_EQ(a.high, 1.0);
  // Reference value for 8/10 at z = 1.96: [0.4902, 0.9433].
  const Interval b = wilson_interval(8, 10);
  EXPECT_NEAR(b.low, 0.4902, 1e-4);
  EXPECT_NEAR(b.high, 0.9433, 1e-4);
  const Interval c = wilson_interval(200, 200);
  EXPECT_DOUBLE_EQ(c.high, 1.0);
  EXPECT_NEAR(c.low, 0.9812, 1e-4);
}
