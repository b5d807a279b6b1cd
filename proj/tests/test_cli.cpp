#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "harness.hpp"
#include "json.hpp"
#include "simboot/bootstrap.hpp"
#include "simboot/cli.hpp"

using namespace simboot;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "simboot");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  CliRun r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string l; std::getline(in, l);) n += l.empty() ? 0 : 1;
  return n;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// Generates a small oracle dataset once per test binary.
const fs::path& small_dataset() {
  static const fs::path dir = [] {
    const fs::path d = harness::fresh_dir("cli-small");
    const CliRun r = cli({"generate", "--planner", "oracle", "--tasks", "put_block,close_jar", "--n", "10", "--seed",
                          "4", "--out", d.string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    return d;
  }();
  return dir;
}

fs::path copy_of_small(const std::string& name) {
  const fs::path d = harness::fresh_dir(name);
  for (const auto& e : fs::directory_iterator(small_dataset())) fs::copy_file(e.path(), d / e.path().filename());
  return d;
}

}  // namespace

TEST(Cli, GenerateWritesDatasetAndManifest) {
  const fs::path& d = small_dataset();
  EXPECT_EQ(line_count(d / "dataset.jsonl"), 20u);
  for (const char* f : {"manifest.json", "report.json", "report.txt", "episodes.jsonl"}) EXPECT_TRUE(fs::exists(d / f));
  const auto manifest = nlohmann::json::parse(std::ifstream(d / "manifest.json"));
  EXPECT_EQ(manifest["total_records"], 20);
  EXPECT_EQ(manifest["tasks"].size(), 2u);
  EXPECT_EQ(manifest["config"]["n_per_task"], 10);
}

TEST(Cli, GenerateIsByteIdenticalOnRerun) {
  const fs::path d = copy_of_small("cli-rerun");
  const std::string dataset = read_file((d / "dataset.jsonl").string());
  const std::string manifest = read_file((d / "manifest.json").string());
  // The manifest records the output directory, so rerun into the same one.
  const CliRun r = cli({"generate", "--planner", "oracle", "--tasks", "put_block,close_jar", "--n", "10", "--seed", "4",
                        "--out", small_dataset().string()});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_EQ(read_file((small_dataset() / "dataset.jsonl").string()), dataset);
  EXPECT_EQ(read_file((small_dataset() / "manifest.json").string()), manifest);
}

TEST(Cli, TaskSubsetIsReflectedInManifest) {
  const fs::path d = harness::fresh_dir("cli-subset");
  ASSERT_EQ(cli({"generate", "--planner", "oracle", "--tasks", "put_block", "--n", "5", "--seed", "1", "--out",
                 d.string()})
                .code,
            kExitOk);
  const auto manifest = nlohmann::json::parse(std::ifstream(d / "manifest.json"));
  ASSERT_EQ(manifest["tasks"].size(), 1u);
  EXPECT_EQ(manifest["tasks"][0]["task_id"], "put_block");
  EXPECT_EQ(manifest["tasks"][0]["records"], 5);
}

TEST(Cli, UnreachablePlannerExitsWithPlannerCode) {
  const fs::path d = harness::fresh_dir("cli-remote");
  write(d / "config.json", R"({"planner": {"kind": "remote", "endpoint": "http://127.0.0.1:1/v1/chat/completions",
                               "timeout_s": 0.2, "max_attempts": 1, "backoff_base_s": 0.01},
                               "max_consecutive_planner_errors": 3})");
  const CliRun r = cli({"generate", "--config", (d / "config.json").string(), "--tasks", "put_block", "--n", "2",
                        "--seed", "1", "--out", (d / "out").string()});
  EXPECT_EQ(r.code, kExitPlanner) << r.err;
}

TEST(Cli, BudgetExhaustionExitsWithBudgetCode) {
  const fs::path d = harness::fresh_dir("cli-budget");
  const CliRun r = cli({"generate", "--planner", "oracle-degraded:1", "--tasks", "put_block", "--n", "3",
                        "--max-attempts", "12", "--seed", "1", "--out", d.string()});
  EXPECT_EQ(r.code, kExitBudget);
  EXPECT_NE(r.err.find("budget"), std::string::npos) << r.err;
  const auto manifest = nlohmann::json::parse(std::ifstream(d / "manifest.json"));
  EXPECT_FALSE(manifest["complete"].get<bool>());
}

TEST(Cli, EvaluatePrintsNineRowsAndAverage) {
  const fs::path d = harness::fresh_dir("cli-eval");
  const CliRun r = cli({"evaluate", "--planner", "oracle", "--episodes", "20", "--seed", "2", "--out", d.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (auto task : kAllTasks) EXPECT_NE(r.out.find(std::string(to_string(task))), std::string::npos);
  EXPECT_NE(r.out.find("Average"), std::string::npos);
  EXPECT_NE(r.out.find("ground truth"), std::string::npos);
  const auto doc = nlohmann::json::parse(std::ifstream(d / "eval_truth.json"));
  EXPECT_EQ(doc["rows"].size(), 9u);
}

TEST(Cli, EvaluateNoisyIsAnnotated) {
  const fs::path d = harness::fresh_dir("cli-eval-noisy");
  const CliRun r = cli({"evaluate", "--planner", "oracle", "--tasks", "put_block", "--episodes", "5", "--seed", "2",
                        "--state", "noisy", "--out", d.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("sigma_pos"), std::string::npos);
  EXPECT_TRUE(fs::exists(d / "eval_noisy.json"));
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({"evaluate", "--planner", "oracle", "--episodes", "0", "--seed", "1"}).code, kExitUsage);
  EXPECT_EQ(cli({"generate", "--planner", "bogus"}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"replay", small_dataset().string()}).code, kExitUsage);
  EXPECT_EQ(cli({"replay", "/nonexistent/simboot", "--all"}).code, kExitUsage);
  EXPECT_EQ(cli({"inspect", "/nonexistent/simboot"}).code, kExitUsage);
  const fs::path d = harness::fresh_dir("cli-badconfig");
  write(d / "config.json", R"({"n_per_task": 3, "colour": "red"})");
  const CliRun r = cli({"generate", "--config", (d / "config.json").string(), "--seed", "1", "--out", d.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("colour"), std::string::npos) << r.err;
}

TEST(Cli, ReplayAllSucceeds) {
  const CliRun r = cli({"replay", small_dataset().string(), "--all"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("20 of 20 records replayed to success"), std::string::npos) << r.out;
}

TEST(Cli, ReplayIndexShowsSteps) {
  const CliRun r = cli({"replay", small_dataset().string(), "--index", "3"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("initial state:"), std::string::npos);
  EXPECT_NE(r.out.find("step 1 ["), std::string::npos);
  EXPECT_EQ(cli({"replay", small_dataset().string(), "--index", "20"}).code, kExitUsage);
}

TEST(Cli, ReplayNamesTamperedRecord) {
  const fs::path d = copy_of_small("cli-tamper");
  std::string text = read_file((d / "dataset.jsonl").string());
  // Move record 7's grasp waypoint (the move before its first close_gripper).
  std::size_t line_start = 0;
  for (int i = 0; i < 7; ++i) line_start = text.find('\n', line_start) + 1;
  const std::size_t at = text.rfind("move_gripper(", text.find("close_gripper()", line_start));
  text.replace(at + 13, 8, "0.400000");
  write(d / "dataset.jsonl", text);
  const CliRun r = cli({"replay", d.string(), "--all"});
  EXPECT_EQ(r.code, kExitIntegrity);
  EXPECT_NE(r.out.find("record 7 "), std::string::npos);
  EXPECT_NE(r.out.find("19 of 20"), std::string::npos) << r.out;
}

TEST(Cli, InspectDetectsCorruption) {
  const CliRun ok = cli({"inspect", small_dataset().string()});
  EXPECT_EQ(ok.code, kExitOk) << ok.err;
  EXPECT_NE(ok.out.find("put_block: 10"), std::string::npos) << ok.out;
  EXPECT_NE(ok.out.find("training recipe"), std::string::npos);

  const fs::path d = copy_of_small("cli-flip");
  std::string text = read_file((d / "dataset.jsonl").string());
  text[text.size() / 2] ^= 0x01;
  write(d / "dataset.jsonl", text);
  const CliRun bad = cli({"inspect", d.string()});
  EXPECT_EQ(bad.code, kExitIntegrity);
  EXPECT_NE(bad.err.find("sha256"), std::string::npos);
}

TEST(Cli, InspectWarnsOnEmptyDataset) {
  const fs::path d = harness::fresh_dir("cli-empty");
  ASSERT_EQ(cli({"generate", "--planner", "oracle-degraded:1", "--tasks", "put_block", "--n", "1", "--max-attempts",
                 "2", "--seed", "1", "--out", d.string()})
                .code,
            kExitBudget);
  const CliRun r = cli({"inspect", d.string()});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.err.find("empty"), std::string::npos);
}

TEST(Cli, SweepChecksPrefixProperty) {
  const fs::path d = harness::fresh_dir("cli-sweep");
  const CliRun r = cli({"sweep", "--planner", "oracle-degraded:0.3", "--tasks", "put_block,stack_blocks", "--ns",
                        "5,10,20", "--seed", "9", "--out", d.string()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("monotone-N prefix property: holds"), std::string::npos) << r.out;
  EXPECT_EQ(line_count(d / "N20" / "dataset.jsonl"), 40u);
}
