#pragma once

// Shared machinery for the unit tests and the acceptance run: oracle
// episodes, an independent Monte-Carlo verifier, a random-step driver for the
// simulator invariants and a parser fuzzer.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "simboot/model.hpp"
#include "simboot/sim.hpp"
#include "simboot/tasks.hpp"

namespace simboot::harness {

/// randomize() that must succeed.
TaskInstance make_instance(TaskId task, std::uint64_t seed);

/// parse() that must succeed.
Plan parse_or_throw(std::string_view text);

/// Oracle plan for the instance (from the true scene), executed. Throws if
/// execution fails.
Execution run_oracle(const TaskInstance& instance, const SimConfig& sim = {});

/// Empty scratch directory under the system temp dir.
std::filesystem::path fresh_dir(const std::string& name);

// ---------------------------------------------------------------------------
// Independent verifier: every quantity is estimated from point samples of the
// objects involved (volume samples for centroids and heights; interior and
// perimeter samples of footprints for signed distances). It implements the
// task predicates from their definitions, not from the library code.

inline constexpr double kOracleTolerance = 0.005;

struct OracleVerdict {
  bool success = false;
  double margin = 0.0;  // >= 0 accepts; distance from the decision boundary
};

OracleVerdict mc_verify(const TaskInstance& instance, const EnvState& final_state,
                        const std::vector<EnvState>& trajectory, std::uint64_t seed, std::size_t samples = 10000);

struct AgreementStats {
  std::size_t cases = 0;
  std::size_t verifier_success = 0;
  std::size_t oracle_success = 0;
  std::size_t decisive = 0;            // |margin| > tolerance
  std::size_t decisive_disagree = 0;
  std::size_t narrow_decisive = 0;     // |margin| > tolerance / 2
  std::size_t narrow_disagree = 0;
  std::size_t band = 0;
  std::size_t band_disagree = 0;
  std::vector<std::string> log;  // one line per disagreement
};

/// Jitters the moved objects of oracle-solved instances into `states`
/// randomized final states and compares verify() against mc_verify().
AgreementStats verification_agreement(TaskId task, std::size_t states, std::uint64_t seed,
                                      std::size_t samples = 10000);

// ---------------------------------------------------------------------------
// Random simulator steps.

struct StepStats {
  std::size_t steps = 0;
  std::size_t errors = 0;
  std::size_t grasps = 0;
  std::size_t releases = 0;
  std::size_t conservation_violations = 0;
  std::size_t exclusivity_violations = 0;
  std::size_t support_violations = 0;
  std::size_t event_violations = 0;  // event inconsistent with the aperture transition
  std::vector<std::string> log;
};

StepStats random_steps(std::size_t steps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Parser fuzzing.

struct FuzzStats {
  std::size_t inputs = 0;
  std::size_t parsed = 0;
  std::size_t rejected = 0;
  std::size_t exceptions = 0;
  std::size_t missing_diagnostics = 0;
  std::size_t bad_positions = 0;
  std::size_t roundtrip_failures = 0;
  std::vector<std::string> log;
};

FuzzStats fuzz_parser(std::size_t inputs, std::uint64_t seed);

}  // namespace simboot::harness
