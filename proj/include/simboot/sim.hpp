#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "simboot/model.hpp"
#include "simboot/result.hpp"

namespace simboot {

struct SimConfig {
  double max_aperture = 0.08;
  double jaw_depth = 0.04;
  double grasp_xy_tolerance = 0.015;
  double contact_tolerance = 0.002;
  // Fraction of the smaller footprint that must overlap for one object to
  // support another.
  double placement_overlap_tolerance = 0.25;
  Bounds workspace = default_workspace();
  std::size_t max_commands_per_episode = kMaxPlanCommands;

  /// Throws ModelError when a tolerance is non-positive or the aperture does
  /// not exceed the grasp tolerance.
  void validate() const;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

enum class SimErrorKind { OutOfWorkspace, TablePenetration, AmbiguousGrasp, NonFiniteTarget, PlanTooLong };

std::string_view to_string(SimErrorKind k);

struct SimError {
  SimErrorKind kind;
  std::size_t command_index = 0;
  std::string message;
};

enum class StepEvent {
  Moved,
  Grasped,
  GraspFailedEmpty,
  Released,
  ReleasedNothing,
  OpenedAlreadyOpen,
  ClosedAlreadyClosed,
};

std::string_view to_string(StepEvent e);

struct StepOutcome {
  EnvState new_state;
  StepEvent event;
  std::string object_id;  // set for Grasped / Released
};

/// Applies one primitive. Motion is a kinematic teleport; a held object
/// follows the gripper rigidly. Releasing drops the held object straight down
/// onto the highest support below it, after which any object left without
/// support settles the same way.
Result<StepOutcome, SimError> step(const EnvState& state, const Command& cmd, const SimConfig& config);

struct TraceStep {
  std::size_t command_index = 0;
  Digest digest;
  StepEvent event = StepEvent::Moved;
};

struct Execution {
  EnvState final_state;
  std::vector<TraceStep> trace;
  // State after each command, parallel to `trace`.
  std::vector<EnvState> states;
};

Result<Execution, SimError> execute(const EnvState& state, const Plan& plan, const SimConfig& config);

/// True iff every non-attached object rests on the table or on a support
/// surface of another non-attached object, within the contact tolerance.
bool support_check(const EnvState& state, const SimConfig& config);

/// True iff `o` is supported in `state` (same rule as support_check).
bool is_supported(const EnvState& state, std::size_t index, const SimConfig& config);

/// Height at which `b` supports objects dropped onto it: the floor for an
/// open container, the top face otherwise.
double support_surface(const ObjectState& b);

/// Whether `b` can carry `a`: non-attached, footprint overlap above the
/// configured fraction, and `b` does not thread through a ring hole of `a`
/// (or vice versa).
bool can_support(const ObjectState& a, const ObjectState& b, const SimConfig& config);

/// Half side of the square hole through a ring object.
double ring_hole_half_extent(const ObjectState& ring);

}  // namespace simboot
