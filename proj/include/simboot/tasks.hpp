#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "simboot/model.hpp"
#include "simboot/result.hpp"

namespace simboot {

/// Positional tolerance used by every success predicate.
inline constexpr double kVerifyTolerance = 0.005;

/// Depth of the hoop's ring volume below its rim.
inline constexpr double kHoopRingDepth = 0.03;

/// Randomized attributes of one instance.
struct GoalBindings {
  // Placeholder values substituted into the description, e.g. color=red.
  std::map<std::string, std::string> attributes;
  // Role name -> object ids, e.g. "zone" -> {"obj01"}.
  std::map<std::string, std::vector<std::string>> roles;

  const std::string& attribute(const std::string& key) const;
  const std::string& role(const std::string& key) const;  // single-object role
  const std::vector<std::string>& role_list(const std::string& key) const;

  friend bool operator==(const GoalBindings&, const GoalBindings&) = default;
};

struct TaskInstance {
  TaskId task_id;
  std::uint64_t seed = 0;
  std::string description;
  EnvState initial_state;
  GoalBindings bindings;

  friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

struct Verdict {
  bool success = false;
  std::string reason;  // names the failing predicate; empty on success
};

enum class RandomizeErrorKind { PlacementExhausted };

struct RandomizeError {
  RandomizeErrorKind kind = RandomizeErrorKind::PlacementExhausted;
  std::string message;
};

inline constexpr int kPlacementAttempts = 1000;

/// The nine desk-scale tasks, in canonical order.
const std::vector<TaskSpec>& task_catalog();
const TaskSpec& task_spec(TaskId id);

/// Gripper start pose shared by every task: above the workspace center, open.
Pose gripper_start_pose();

/// Samples a scene for `spec`. Deterministic in (spec, seed).
Result<TaskInstance, RandomizeError> randomize(const TaskSpec& spec, std::uint64_t seed);

/// Success predicate for the instance's task. `trajectory` holds the state
/// after each executed command; only the hoop task reads it.
Verdict verify(const TaskInstance& instance, const EnvState& final_state,
               std::span<const EnvState> trajectory = {}, double tolerance = kVerifyTolerance);

/// Machine-readable task catalog (JSON text).
std::string task_manifest_json();

/// Replaces `{key}` markers with attribute values. Unknown keys are left in place.
std::string resolve_description(const std::string& description_template, const GoalBindings& bindings);

}  // namespace simboot
