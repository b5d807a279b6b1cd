#pragma once

// Run configuration shared by generate / evaluate / replay and its JSON form.
//
// Config file (every key optional, unknown keys rejected):
//   {
//     "tasks": ["put_block", ...] | "all",
//     "n_per_task": 2000, "max_attempts_per_task": 40000,
//     "episodes_per_task": 100, "seed": 7, "parallel": 1,
//     "output_dir": "out", "template_path": "share/prompt_template.txt",
//     "state": "truth" | "noisy",
//     "max_consecutive_planner_errors": 20,
//     "planner": {"kind": "oracle" | "remote" | "oracle-degraded", "failure_rate": 0.3,
//                 "endpoint": "...", "model": "...", "temperature": 0.7,
//                 "max_tokens": 1024, "timeout_s": 60, "max_attempts": 3,
//                 "backoff_base_s": 1.0, "max_in_flight": 4,
//                 "api_key_env": "SIMBOOT_API_KEY", "verbose": false},
//     "sim": {"max_aperture": 0.08, "jaw_depth": 0.04, "grasp_xy_tolerance": 0.015,
//             "contact_tolerance": 0.002, "placement_overlap_tolerance": 0.25,
//             "workspace": {"min": [..3], "max": [..3]}, "max_commands_per_episode": 100},
//     "noise": {"sigma_pos": 0.005, "sigma_dim": 0.003, "sigma_yaw": 0.035,
//               "outlier_probability": 0.1, "outlier_offset_range": 0.2, "views": 3}
//   }

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "simboot/model.hpp"
#include "simboot/perception.hpp"
#include "simboot/planner.hpp"
#include "simboot/result.hpp"
#include "simboot/sim.hpp"

namespace simboot {

struct PerceptionSettings {
  NoiseModel model;
  std::size_t views = kDefaultViews;
  friend bool operator==(const PerceptionSettings&, const PerceptionSettings&) = default;
};

struct RunConfig {
  std::vector<TaskId> tasks{kAllTasks.begin(), kAllTasks.end()};
  std::size_t n_per_task = 2000;
  std::optional<std::size_t> max_attempts_per_task;  // default 20 * n_per_task
  std::size_t episodes_per_task = 100;                // evaluate only
  PlannerConfig planner;
  SimConfig sim;
  PerceptionSettings perception;
  bool noisy_state = false;  // planner sees the fused estimate instead of the true scene
  std::size_t parallelism = 1;
  std::uint64_t master_seed = 0;
  std::string output_dir = "out";
  std::string template_path;  // empty: built-in template
  std::string template_text;  // empty: built-in template
  std::size_t max_consecutive_planner_errors = 20;

  std::size_t attempt_budget() const { return max_attempts_per_task.value_or(20 * n_per_task); }

  /// Throws ModelError on an invalid configuration.
  void validate() const;
};

struct ConfigError {
  std::string message;
};

using ordered_json = nlohmann::ordered_json;

ordered_json sim_to_json(const SimConfig& sim);
ordered_json to_json(const RunConfig& config);

/// Applies the keys present in `doc` on top of `base`.
Result<RunConfig, ConfigError> config_from_json(const nlohmann::json& doc, RunConfig base = {});
Result<SimConfig, ConfigError> sim_from_json(const nlohmann::json& doc);

/// Reads a config file; the template file it names is loaded as well.
/// `seed_given` reports whether the file sets "seed".
Result<RunConfig, ConfigError> load_config_file(const std::string& path, bool* seed_given = nullptr);

}  // namespace simboot
