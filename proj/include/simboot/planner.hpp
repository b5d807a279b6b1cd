#pragma once

// Producers of raw plan text. Nothing a planner returns is trusted: callers
// always parse, execute and verify it.

#include <cstdint>
#include <memory>
#include <string>

#include "simboot/model.hpp"
#include "simboot/result.hpp"
#include "simboot/tasks.hpp"

namespace simboot {

enum class PlannerKind { Remote, Oracle, OracleDegraded };

struct RetryPolicy {
  int max_attempts = 3;
  double backoff_base_s = 1.0;  // wait before retry i (1-based) is base * 2^(i-1)
  friend bool operator==(const RetryPolicy&, const RetryPolicy&) = default;
};

struct PlannerConfig {
  PlannerKind kind = PlannerKind::Oracle;
  double failure_rate = 0.0;  // OracleDegraded only
  std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model = "llama-3.3-70b-instruct";
  double temperature = 0.7;
  int max_tokens = 1024;
  double timeout_s = 60.0;  // per request
  RetryPolicy retry;
  int max_in_flight = 4;
  std::string api_key_env = "SIMBOOT_API_KEY";
  bool verbose = false;

  /// Throws ModelError on an invalid combination.
  void validate() const;

  friend bool operator==(const PlannerConfig&, const PlannerConfig&) = default;
};

std::string to_string(PlannerKind kind);

/// Parses "remote", "oracle" or "oracle-degraded:<rate>" into `config`.
/// Returns false on malformed input.
bool apply_planner_spec(std::string_view spec, PlannerConfig& config);

/// Inverse of apply_planner_spec.
std::string planner_spec(const PlannerConfig& config);

enum class PlannerErrorKind { Timeout, HttpStatus, MalformedResponse, RetriesExhausted };

std::string_view to_string(PlannerErrorKind k);

struct PlannerError {
  PlannerErrorKind kind = PlannerErrorKind::MalformedResponse;
  int http_status = 0;  // set for HttpStatus
  std::string message;
};

/// Everything a planner may look at for one episode. Remote planners read
/// only `prompt`; the oracle reads the instance bindings and the observed
/// scene through this side channel.
struct PlanningRequest {
  const std::string& prompt;
  const TaskInstance& instance;
  const EnvState& observed;
  std::uint64_t seed = 0;
};

class Planner {
 public:
  virtual ~Planner() = default;
  /// Must be safe to call concurrently from several worker threads.
  virtual Result<std::string, PlannerError> complete(const PlanningRequest& request) = 0;
};

/// Scripted pick-and-place solution for the instance, planned from
/// `observed`, in canonical DSL text.
std::string oracle_plan_text(const TaskInstance& instance, const EnvState& observed);

/// Oracle output, sabotaged with probability `failure_rate` (seeded by
/// `seed`) so that it can no longer succeed: either one close_gripper is
/// dropped or one grasp waypoint is moved 10 cm away from every graspable
/// object.
std::string degraded_plan_text(const TaskInstance& instance, const EnvState& observed, double failure_rate,
                               std::uint64_t seed);

std::unique_ptr<Planner> make_planner(const PlannerConfig& config);

}  // namespace simboot
