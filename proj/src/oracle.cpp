#include <algorithm>
#include <cmath>
#include <numbers>

#include "simboot/dsl.hpp"
#include "simboot/geometry.hpp"
#include "simboot/planner.hpp"
#include "simboot/rng.hpp"
#include "simboot/sim.hpp"

namespace simboot {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGraspDepth = 0.02;      // palm above the object's top face at grasp
constexpr double kPreGraspHeight = 0.10;  // approach height above the top face
constexpr double kReleaseGap = 0.01;      // object bottom above its support at release
constexpr double kSafeFloor = 0.35;
constexpr double kSafeClearance = 0.25;
constexpr double kSafeCeiling = 0.75;
constexpr double kPerturbDistance = 0.10;
constexpr double kPerturbClearance = 0.05;
constexpr double kBottleSetDown = 0.15;  // cap set down this far from the bottle

struct Target {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;  // desired object center height at release
};

struct ScriptedPlan {
  std::vector<Command> commands;
  std::vector<std::size_t> close_indices;  // each close_gripper
  std::vector<Vec2> occupied;              // pick and place points of every object
};

class Script {
 public:
  explicit Script(const EnvState& observed) {
    double max_top = 0.0;
    for (const auto& o : observed.objects()) max_top = std::max(max_top, o.top());
    safe_z_ = std::clamp(max_top + kSafeClearance, kSafeFloor, kSafeCeiling);
    for (const auto& o : observed.objects()) {
      if (o.graspable()) plan_.occupied.push_back({o.center().x(), o.center().y()});
    }
    plan_.commands.push_back(OpenGripper{});
  }

  // Jaws close across the object's narrower side.
  static double grasp_yaw(const ObjectState& o) {
    return o.size().width <= o.size().length ? o.center().yaw() : o.center().yaw() + 0.5 * kPi;
  }

  void pick_and_place(const ObjectState& o, const Target& t) {
    const double yaw = grasp_yaw(o);
    const double ox = o.center().x();
    const double oy = o.center().y();
    const double grasp_z = o.top() + kGraspDepth;
    const double palm_over_center = grasp_z - o.center().z();
    move(ox, oy, o.top() + kPreGraspHeight, yaw);
    move(ox, oy, grasp_z, yaw);
    plan_.close_indices.push_back(plan_.commands.size());
    plan_.commands.push_back(CloseGripper{});
    move(ox, oy, safe_z_, yaw);
    move(t.x, t.y, safe_z_, yaw);
    move(t.x, t.y, t.z + palm_over_center, yaw);
    plan_.commands.push_back(OpenGripper{});
    move(t.x, t.y, safe_z_, yaw);
    plan_.occupied.push_back({t.x, t.y});
  }

  ScriptedPlan finish() { return std::move(plan_); }

 private:
  void move(double x, double y, double z, double yaw) {
    plan_.commands.push_back(
        MoveGripper{Pose(dsl::quantize(x), dsl::quantize(y), dsl::quantize(z), dsl::quantize_yaw(yaw))});
  }

  ScriptedPlan plan_;
  double safe_z_ = kSafeFloor;
};

const ObjectState& get(const EnvState& s, const std::string& id) {
  const ObjectState* o = s.find(id);
  if (o == nullptr) throw std::logic_error("oracle: object '" + id + "' missing from observed state");
  return *o;
}

// Release point placing `o` with its bottom kReleaseGap above `surface`.
Target above(const ObjectState& region, const ObjectState& o, double surface) {
  return {region.center().x(), region.center().y(), surface + kReleaseGap + 0.5 * o.size().height};
}

Target slot(const ObjectState& region, double lx, double ly, const ObjectState& o) {
  const double c = std::cos(region.center().yaw());
  const double s = std::sin(region.center().yaw());
  Target t = above(region, o, support_surface(region));
  t.x += c * lx - s * ly;
  t.y += s * lx + c * ly;
  return t;
}

ScriptedPlan script(const TaskInstance& inst, const EnvState& s) {
  const GoalBindings& g = inst.bindings;
  Script plan(s);
  switch (inst.task_id) {
    case TaskId::PutBlock: {
      const ObjectState& block = get(s, g.role("block"));
      const ObjectState& zone = get(s, g.role("zone"));
      plan.pick_and_place(block, above(zone, block, zone.top()));
      break;
    }
    case TaskId::StackBlocks: {
      const ObjectState& base = get(s, g.role("target"));
      const auto count = static_cast<std::size_t>(std::stoi(g.attribute("count")));
      const auto& blocks = g.role_list("stackable");
      double surface = base.top();
      for (std::size_t i = 0; i < count && i < blocks.size(); ++i) {
        const ObjectState& block = get(s, blocks[i]);
        plan.pick_and_place(block, above(base, block, surface));
        surface += block.size().height;
      }
      break;
    }
    case TaskId::RubbishInBin: {
      const ObjectState& rubbish = get(s, g.role("rubbish"));
      const ObjectState& bin = get(s, g.role("bin"));
      plan.pick_and_place(rubbish, above(bin, rubbish, support_surface(bin)));
      break;
    }
    case TaskId::EmptyContainer: {
      constexpr double kSlot = 0.04;
      const double slots[4][2] = {{kSlot, kSlot}, {-kSlot, kSlot}, {-kSlot, -kSlot}, {kSlot, -kSlot}};
      const ObjectState& target = get(s, g.role("target"));
      const auto& items = g.role_list("items");
      for (std::size_t i = 0; i < items.size(); ++i) {
        const ObjectState& item = get(s, items[i]);
        plan.pick_and_place(item, slot(target, slots[i % 4][0], slots[i % 4][1], item));
      }
      break;
    }
    case TaskId::MeatOffGrill: {
      const ObjectState& meat = get(s, g.role("meat"));
      const ObjectState& area = get(s, g.role("area"));
      plan.pick_and_place(meat, above(area, meat, area.top()));
      break;
    }
    case TaskId::OpenBottle: {
      const ObjectState& cap = get(s, g.role("cap"));
      const ObjectState& bottle = get(s, g.role("bottle"));
      // Set the cap down on the table, stepping toward the workspace center.
      const double bx = bottle.center().x();
      const double by = bottle.center().y();
      const double r = std::hypot(bx, by);
      const double ux = r > 1e-9 ? -bx / r : 1.0;
      const double uy = r > 1e-9 ? -by / r : 0.0;
      plan.pick_and_place(cap, {bx + kBottleSetDown * ux, by + kBottleSetDown * uy,
                                kReleaseGap + 0.5 * cap.size().height});
      break;
    }
    case TaskId::CloseJar: {
      const ObjectState& lid = get(s, g.role("lid"));
      const ObjectState& jar = get(s, g.role("jar"));
      plan.pick_and_place(lid, above(jar, lid, jar.top()));
      break;
    }
    case TaskId::InsertInPeg: {
      const ObjectState& ring = get(s, g.role("ring"));
      const ObjectState& peg = get(s, g.role("peg"));
      plan.pick_and_place(ring, above(peg, ring, peg.top()));
      break;
    }
    case TaskId::BasketballInHoop: {
      const ObjectState& ball = get(s, g.role("ball"));
      const ObjectState& hoop = get(s, g.role("hoop"));
      // Lower the ball into the middle of the ring volume, then let go.
      plan.pick_and_place(ball, {hoop.center().x(), hoop.center().y(), hoop.top() - 0.5 * kHoopRingDepth});
      break;
    }
  }
  return plan.finish();
}

std::string render(const std::vector<Command>& commands) {
  return dsl::pretty_print(Plan(commands, std::string()));
}

// Moves the grasp waypoint before `close_index` 10 cm away from every pick
// and place point. Returns false when no direction works.
bool shift_grasp(ScriptedPlan& plan, std::size_t close_index, const Bounds& workspace, Rng& rng) {
  auto* grasp = std::get_if<MoveGripper>(&plan.commands[close_index - 1]);
  if (grasp == nullptr) return false;
  const Pose& p = grasp->target;
  const double start = rng.uniform(-kPi, kPi);
  for (int k = 0; k < 8; ++k) {
    const double a = start + k * 0.25 * kPi;
    const double x = dsl::quantize(p.x() + kPerturbDistance * std::cos(a));
    const double y = dsl::quantize(p.y() + kPerturbDistance * std::sin(a));
    if (!workspace.contains(x, y, p.z())) continue;
    const bool clear = std::all_of(plan.occupied.begin(), plan.occupied.end(), [&](const Vec2& o) {
      return std::hypot(o.x - x, o.y - y) > kPerturbClearance;
    });
    if (!clear) continue;
    grasp->target = Pose(x, y, p.z(), p.yaw());
    return true;
  }
  return false;
}

}  // namespace

std::string oracle_plan_text(const TaskInstance& instance, const EnvState& observed) {
  return render(script(instance, observed).commands);
}

std::string degraded_plan_text(const TaskInstance& instance, const EnvState& observed, double failure_rate,
                               std::uint64_t seed) {
  ScriptedPlan plan = script(instance, observed);
  Rng rng(derive_seed(seed, {0xde9a, static_cast<std::uint64_t>(instance.task_id)}));
  if (!rng.bernoulli(failure_rate) || plan.close_indices.empty()) return render(plan.commands);

  const std::size_t which =
      plan.close_indices[static_cast<std::size_t>(rng.integer(0, int(plan.close_indices.size()) - 1))];
  const bool perturb = rng.bernoulli(0.5);
  if (perturb && shift_grasp(plan, which, observed.workspace(), rng)) return render(plan.commands);
  plan.commands.erase(plan.commands.begin() + static_cast<std::ptrdiff_t>(which));
  return render(plan.commands);
}

}  // namespace simboot
