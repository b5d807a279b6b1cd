#include "simboot/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>

#include "simboot/geometry.hpp"

namespace simboot {

namespace {

constexpr double kRingHoleFraction = 0.3;

Unexpected<SimError> fail(SimErrorKind kind, std::string message) {
  return unexpected(SimError{kind, 0, std::move(message)});
}

double land_height(const std::vector<ObjectState>& objects, std::size_t index, const SimConfig& config) {
  const ObjectState& x = objects[index];
  double best = 0.0;
  for (std::size_t j = 0; j < objects.size(); ++j) {
    if (j == index) continue;
    const ObjectState& b = objects[j];
    if (!can_support(x, b, config)) continue;
    const double surface = support_surface(b);
    if (surface <= x.bottom() + config.contact_tolerance) best = std::max(best, surface);
  }
  return best;
}

bool supported_in(const std::vector<ObjectState>& objects, std::size_t index, const SimConfig& config) {
  const ObjectState& x = objects[index];
  if (std::abs(x.bottom()) <= config.contact_tolerance) return true;
  for (std::size_t j = 0; j < objects.size(); ++j) {
    if (j == index) continue;
    const ObjectState& b = objects[j];
    if (std::abs(x.bottom() - support_surface(b)) <= config.contact_tolerance &&
        can_support(x, b, config)) {
      return true;
    }
  }
  return false;
}

ObjectState dropped(const std::vector<ObjectState>& objects, std::size_t index, const SimConfig& config) {
  const ObjectState& x = objects[index];
  const double z = land_height(objects, index, config) + 0.5 * x.size().height;
  const Pose& c = x.center();
  return x.moved_to(Pose(c.x(), c.y(), z, c.yaw()));
}

// Drops every unsupported free object, lowest first, until nothing moves.
void settle(std::vector<ObjectState>& objects, const SimConfig& config) {
  for (std::size_t pass = 0; pass <= objects.size(); ++pass) {
    std::vector<std::size_t> order(objects.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return objects[a].bottom() < objects[b].bottom();
    });
    bool moved = false;
    for (std::size_t i : order) {
      if (objects[i].attached() || supported_in(objects, i, config)) continue;
      objects[i] = dropped(objects, i, config);
      moved = true;
    }
    if (!moved) return;
  }
}

Result<StepOutcome, SimError> move(const EnvState& state, const Pose& target, const SimConfig& config) {
  if (!std::isfinite(target.x()) || !std::isfinite(target.y()) || !std::isfinite(target.z())) {
    return fail(SimErrorKind::NonFiniteTarget, "move_gripper target is not finite");
  }
  const Pose& from = state.gripper_pose();
  if (target == from) return StepOutcome{state, StepEvent::Moved, {}};

  if (target.z() < 0.0) {
    return fail(SimErrorKind::TablePenetration, "gripper path passes below the table");
  }

  std::vector<ObjectState> objects(state.objects().begin(), state.objects().end());
  const auto held = state.attached_index();
  if (held) {
    const ObjectState& o = objects[*held];
    const double dyaw = target.yaw() - from.yaw();
    double nx = 0.0;
    double ny = 0.0;
    if (dyaw == 0.0) {
      nx = o.center().x() + (target.x() - from.x());
      ny = o.center().y() + (target.y() - from.y());
    } else {
      const double rx = o.center().x() - from.x();
      const double ry = o.center().y() - from.y();
      const double c = std::cos(dyaw);
      const double s = std::sin(dyaw);
      nx = target.x() + c * rx - s * ry;
      ny = target.y() + s * rx + c * ry;
    }
    const double nz = o.center().z() + (target.z() - from.z());
    // z is linear along the segment, so the endpoints bound the sweep; the
    // start is valid by induction.
    if (nz < 0.5 * o.size().height - config.contact_tolerance) {
      return fail(SimErrorKind::TablePenetration, "carried object '" + o.id() + "' would pass below the table");
    }
    objects[*held] = o.moved_to(Pose(nx, ny, nz, o.center().yaw() + dyaw));
  }

  if (!config.workspace.contains(target.x(), target.y(), target.z())) {
    return fail(SimErrorKind::OutOfWorkspace, "move_gripper target outside the workspace");
  }

  if (held) settle(objects, config);
  return StepOutcome{EnvState(std::move(objects), target, state.gripper_open(), state.workspace()),
                     StepEvent::Moved, {}};
}

Result<StepOutcome, SimError> close(const EnvState& state, const SimConfig& config) {
  if (!state.gripper_open()) return StepOutcome{state, StepEvent::ClosedAlreadyClosed, {}};

  const Pose& g = state.gripper_pose();
  const double jaw_axis = g.yaw() + 0.5 * std::numbers::pi;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < state.objects().size(); ++i) {
    const ObjectState& o = state.objects()[i];
    if (!o.graspable() || o.attached()) continue;
    if (distance_xy(o.center(), g) > config.grasp_xy_tolerance) continue;
    if (o.top() < g.z() - config.jaw_depth || o.top() > g.z() + config.contact_tolerance) continue;
    if (projected_extent(o, jaw_axis) > config.max_aperture) continue;
    candidates.push_back(i);
  }

  if (candidates.size() > 1) {
    return fail(SimErrorKind::AmbiguousGrasp, "close_gripper finds " + std::to_string(candidates.size()) +
                                                  " graspable objects between the jaws");
  }
  if (candidates.empty()) {
    return StepOutcome{state.with_gripper(g, false), StepEvent::GraspFailedEmpty, {}};
  }

  std::vector<ObjectState> objects(state.objects().begin(), state.objects().end());
  const std::size_t i = candidates.front();
  objects[i] = objects[i].with_attached(true);
  std::string id = objects[i].id();
  settle(objects, config);
  return StepOutcome{EnvState(std::move(objects), g, false, state.workspace()), StepEvent::Grasped,
                     std::move(id)};
}

Result<StepOutcome, SimError> open(const EnvState& state, const SimConfig& config) {
  if (state.gripper_open()) return StepOutcome{state, StepEvent::OpenedAlreadyOpen, {}};

  const auto held = state.attached_index();
  if (!held) {
    return StepOutcome{state.with_gripper(state.gripper_pose(), true), StepEvent::ReleasedNothing, {}};
  }
  std::vector<ObjectState> objects(state.objects().begin(), state.objects().end());
  objects[*held] = objects[*held].with_attached(false);
  objects[*held] = dropped(objects, *held, config);
  std::string id = objects[*held].id();
  settle(objects, config);
  return StepOutcome{EnvState(std::move(objects), state.gripper_pose(), true, state.workspace()),
                     StepEvent::Released, std::move(id)};
}

}  // namespace

void SimConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(max_aperture) || !positive(jaw_depth) || !positive(grasp_xy_tolerance) ||
      !positive(contact_tolerance) || !positive(placement_overlap_tolerance)) {
    throw ModelError("sim tolerances must be positive");
  }
  if (max_aperture <= grasp_xy_tolerance) throw ModelError("max_aperture must exceed grasp_xy_tolerance");
  if (placement_overlap_tolerance >= 1.0) throw ModelError("placement_overlap_tolerance must be < 1");
  for (int a = 0; a < 3; ++a) {
    if (!(workspace.min[a] < workspace.max[a])) throw ModelError("workspace min must be < max");
  }
  if (max_commands_per_episode == 0 || max_commands_per_episode > kMaxPlanCommands) {
    throw ModelError("max_commands_per_episode must be in [1, 100]");
  }
}

std::string_view to_string(SimErrorKind k) {
  switch (k) {
    case SimErrorKind::OutOfWorkspace: return "out_of_workspace";
    case SimErrorKind::TablePenetration: return "table_penetration";
    case SimErrorKind::AmbiguousGrasp: return "ambiguous_grasp";
    case SimErrorKind::NonFiniteTarget: return "non_finite_target";
    case SimErrorKind::PlanTooLong: return "plan_too_long";
  }
  return "out_of_workspace";
}

std::string_view to_string(StepEvent e) {
  switch (e) {
    case StepEvent::Moved: return "moved";
    case StepEvent::Grasped: return "grasped";
    case StepEvent::GraspFailedEmpty: return "grasp_failed_empty";
    case StepEvent::Released: return "released";
    case StepEvent::ReleasedNothing: return "released_nothing";
    case StepEvent::OpenedAlreadyOpen: return "opened_already_open";
    case StepEvent::ClosedAlreadyClosed: return "closed_already_closed";
  }
  return "moved";
}

double ring_hole_half_extent(const ObjectState& ring) {
  return kRingHoleFraction * std::min(ring.size().length, ring.size().width);
}

double support_surface(const ObjectState& b) {
  return b.category() == Category::Container ? b.bottom() : b.top();
}

bool can_support(const ObjectState& a, const ObjectState& b, const SimConfig& config) {
  if (b.attached() || a.id() == b.id()) return false;
  const Footprint fa = Footprint::of(a);
  const Footprint fb = Footprint::of(b);
  const double needed = config.placement_overlap_tolerance * std::min(fa.area(), fb.area());
  if (overlap_area(fa, fb) <= needed) return false;
  auto threads = [](const ObjectState& ring, const Footprint& other) {
    if (ring.category() != Category::Ring) return false;
    const double h = ring_hole_half_extent(ring);
    const Footprint hole{{ring.center().x(), ring.center().y()}, h, h, ring.center().yaw()};
    return footprint_within(other, hole);
  };
  return !threads(a, fb) && !threads(b, fa);
}

Result<StepOutcome, SimError> step(const EnvState& state, const Command& cmd, const SimConfig& config) {
  return std::visit(
      [&](const auto& c) -> Result<StepOutcome, SimError> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, MoveGripper>) {
          return move(state, c.target, config);
        } else if constexpr (std::is_same_v<T, CloseGripper>) {
          return close(state, config);
        } else {
          return open(state, config);
        }
      },
      cmd);
}

Result<Execution, SimError> execute(const EnvState& state, const Plan& plan, const SimConfig& config) {
  if (plan.size() > config.max_commands_per_episode) {
    return unexpected(SimError{SimErrorKind::PlanTooLong, config.max_commands_per_episode,
                               "plan has " + std::to_string(plan.size()) + " commands, cap is " +
                                   std::to_string(config.max_commands_per_episode)});
  }
  Execution run{state, {}, {}};
  run.trace.reserve(plan.size());
  run.states.reserve(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    auto outcome = step(run.final_state, plan.commands()[i], config);
    if (!outcome) {
      SimError err = outcome.error();
      err.command_index = i;
      return unexpected(std::move(err));
    }
    run.final_state = std::move(outcome->new_state);
    run.trace.push_back({i, state_digest(run.final_state), outcome->event});
    run.states.push_back(run.final_state);
  }
  return run;
}

bool is_supported(const EnvState& state, std::size_t index, const SimConfig& config) {
  std::vector<ObjectState> objects(state.objects().begin(), state.objects().end());
  return objects[index].attached() || supported_in(objects, index, config);
}

bool support_check(const EnvState& state, const SimConfig& config) {
  std::vector<ObjectState> objects(state.objects().begin(), state.objects().end());
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (!objects[i].attached() && !supported_in(objects, i, config)) return false;
  }
  return true;
}

}  // namespace simboot
