#include "simboot/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "json.hpp"

#include "simboot/geometry.hpp"
#include "simboot/rng.hpp"
#include "simboot/sim.hpp"

namespace simboot {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDefaultClearance = 0.03;

const std::vector<std::string> kColors = {"red", "green", "blue", "yellow", "orange", "purple"};

TaskSpec make_spec(TaskId id, std::string description, int min_count, int max_count, int distractors,
                   std::string verifier) {
  TaskSpec spec{id, std::move(description), {}, std::move(verifier)};
  spec.randomizer.colors = kColors;
  spec.randomizer.min_count = min_count;
  spec.randomizer.max_count = max_count;
  spec.randomizer.distractors = distractors;
  return spec;
}

std::string count_meaning(TaskId id) {
  switch (id) {
    case TaskId::StackBlocks: return "blocks to stack";
    case TaskId::EmptyContainer: return "items in the large container";
    case TaskId::PutBlock: return "distractor target areas";
    default: return "unused";
  }
}

class SceneBuilder {
 public:
  SceneBuilder(Rng& rng, const RandomizerParams& params) : rng_(rng), params_(params) {}

  std::string add(std::string name, Category category, const Pose& center, Extent size, bool graspable) {
    char id[16];
    std::snprintf(id, sizeof id, "obj%02zu", objects_.size());
    objects_.emplace_back(id, std::move(name), category, center, size, graspable);
    return objects_.back().id();
  }

  // Samples a table pose whose footprint keeps `clearance` from every object
  // placed so far. Throws PlacementFailed after kPlacementAttempts tries.
  Pose sample_free(Extent size, double clearance = kDefaultClearance) {
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      const double x = rng_.uniform(params_.spawn_min_x, params_.spawn_max_x);
      const double y = rng_.uniform(params_.spawn_min_y, params_.spawn_max_y);
      const double yaw = rng_.uniform(-kPi, kPi);
      Pose pose(x, y, 0.5 * size.height, yaw);
      Footprint f{{x, y}, 0.5 * size.length + 0.5 * clearance, 0.5 * size.width + 0.5 * clearance, pose.yaw()};
      bool free = true;
      for (const auto& o : objects_) {
        if (footprints_intersect(f, Footprint::of(o).inflated(0.5 * clearance))) {
          free = false;
          break;
        }
      }
      if (free) return pose;
    }
    throw PlacementFailed{};
  }

  std::string pick_color() { return params_.colors.at(rng_.integer(0, int(params_.colors.size()) - 1)); }

  std::vector<std::string> other_colors(const std::string& exclude, int n) {
    std::vector<std::string> pool;
    for (const auto& c : params_.colors) {
      if (c != exclude) pool.push_back(c);
    }
    std::shuffle(pool.begin(), pool.end(), rng_.engine());
    pool.resize(std::min<std::size_t>(pool.size(), std::size_t(std::max(n, 0))));
    return pool;
  }

  const ObjectState& get(const std::string& id) const {
    for (const auto& o : objects_) {
      if (o.id() == id) return o;
    }
    throw std::logic_error("unknown object " + id);
  }

  std::vector<ObjectState> take() { return std::move(objects_); }

  struct PlacementFailed {};

 private:
  Rng& rng_;
  const RandomizerParams& params_;
  std::vector<ObjectState> objects_;
};

// Local-frame offset of a child placed on/in a parent.
Pose offset_from(const ObjectState& parent, double lx, double ly, double z, double yaw) {
  const Pose& p = parent.center();
  const double c = std::cos(p.yaw());
  const double s = std::sin(p.yaw());
  return Pose(p.x() + c * lx - s * ly, p.y() + s * lx + c * ly, z, yaw);
}

void build_put_block(SceneBuilder& b, Rng& rng, const RandomizerParams& p, GoalBindings& g) {
  const std::string color = b.pick_color();
  const Extent zone{0.12, 0.12, 0.002};
  g.attributes["color"] = color;
  g.roles["zone"] = {b.add(color + " target area", Category::TargetZone, b.sample_free(zone), zone, false)};
  for (const auto& c : b.other_colors(color, rng.integer(p.min_count, p.max_count))) {
    b.add(c + " target area", Category::TargetZone, b.sample_free(zone), zone, false);
  }
  const Extent block{0.04, 0.04, 0.04};
  g.roles["block"] = {b.add("block", Category::Block, b.sample_free(block), block, true)};
}

void build_stack_blocks(SceneBuilder& b, Rng& rng, const RandomizerParams& p, GoalBindings& g) {
  const std::string color = b.pick_color();
  const int count = rng.integer(p.min_count, p.max_count);
  g.attributes["color"] = color;
  g.attributes["count"] = std::to_string(count);
  const Extent target{0.05, 0.05, 0.04};
  g.roles["target"] = {b.add("target block", Category::Block, b.sample_free(target), target, true)};
  const Extent block{0.04, 0.04, 0.04};
  const int same = count + rng.integer(0, 1);
  for (int i = 1; i <= same; ++i) {
    g.roles["stackable"].push_back(
        b.add(color + " block " + std::to_string(i), Category::Block, b.sample_free(block), block, true));
  }
  for (const auto& c : b.other_colors(color, p.distractors)) {
    b.add(c + " block 1", Category::Block, b.sample_free(block), block, true);
  }
}

void build_rubbish_in_bin(SceneBuilder& b, Rng&, const RandomizerParams& p, GoalBindings& g) {
  const Extent bin{0.16, 0.12, 0.10};
  g.roles["bin"] = {b.add("bin", Category::Container, b.sample_free(bin), bin, false)};
  const Extent rubbish{0.05, 0.03, 0.03};
  g.roles["rubbish"] = {b.add("rubbish", Category::Block, b.sample_free(rubbish), rubbish, true)};
  const Extent tomato{0.035, 0.035, 0.035};
  for (int i = 1; i <= p.distractors; ++i) {
    b.add("tomato " + std::to_string(i), Category::Block, b.sample_free(tomato), tomato, true);
  }
}

void build_empty_container(SceneBuilder& b, Rng& rng, const RandomizerParams& p, GoalBindings& g) {
  const std::string color = b.pick_color();
  g.attributes["color"] = color;
  const Extent large{0.26, 0.26, 0.06};
  const std::string source = b.add("large container", Category::Container, b.sample_free(large), large, false);
  g.roles["source"] = {source};

  const Extent item{0.035, 0.035, 0.035};
  std::vector<std::pair<double, double>> slots = {{0.06, 0.06}, {-0.06, 0.06}, {-0.06, -0.06}, {0.06, -0.06}};
  std::shuffle(slots.begin(), slots.end(), rng.engine());
  const int count = rng.integer(p.min_count, p.max_count);
  for (int i = 0; i < count; ++i) {
    const ObjectState& parent = b.get(source);
    Pose pose = offset_from(parent, slots[i].first + rng.uniform(-0.01, 0.01),
                            slots[i].second + rng.uniform(-0.01, 0.01), parent.bottom() + 0.5 * item.height,
                            rng.uniform(-kPi, kPi));
    g.roles["items"].push_back(b.add("item " + std::to_string(i + 1), Category::Block, pose, item, true));
  }

  const Extent box{0.16, 0.16, 0.06};
  g.roles["target"] = {b.add(color + " container", Category::Container, b.sample_free(box), box, false)};
  for (const auto& c : b.other_colors(color, p.distractors)) {
    b.add(c + " container", Category::Container, b.sample_free(box), box, false);
  }
}

void build_meat_off_grill(SceneBuilder& b, Rng& rng, const RandomizerParams&, GoalBindings& g) {
  const Extent grill{0.24, 0.14, 0.06};
  const std::string grill_id = b.add("grill", Category::Fixture, b.sample_free(grill), grill, false);
  g.roles["grill"] = {grill_id};

  const bool chicken_first = rng.bernoulli(0.5);
  const std::string meat = rng.bernoulli(0.5) ? "chicken" : "steak";
  g.attributes["meat"] = meat;
  const struct {
    const char* name;
    Extent size;
  } pieces[] = {{"chicken", {0.06, 0.04, 0.025}}, {"steak", {0.07, 0.045, 0.02}}};
  for (int i = 0; i < 2; ++i) {
    const auto& piece = pieces[i];
    const ObjectState& parent = b.get(grill_id);
    const double side = ((i == 0) == chicken_first) ? 0.06 : -0.06;
    Pose pose = offset_from(parent, side + rng.uniform(-0.005, 0.005), rng.uniform(-0.005, 0.005),
                            parent.top() + 0.5 * piece.size.height,
                            parent.center().yaw() + 0.5 * kPi + rng.uniform(-0.3, 0.3));
    std::string id = b.add(piece.name, Category::Block, pose, piece.size, true);
    if (meat == piece.name) g.roles["meat"] = {id};
  }
  const Extent area{0.14, 0.14, 0.002};
  g.roles["area"] = {b.add("designated area", Category::TargetZone, b.sample_free(area), area, false)};
}

void build_open_bottle(SceneBuilder& b, Rng& rng, const RandomizerParams&, GoalBindings& g) {
  const Extent bottle{0.07, 0.07, 0.20};
  const std::string bottle_id = b.add("wine bottle", Category::Fixture, b.sample_free(bottle), bottle, false);
  g.roles["bottle"] = {bottle_id};
  const ObjectState& parent = b.get(bottle_id);
  const Extent cap{0.03, 0.03, 0.03};
  Pose pose = offset_from(parent, 0.0, 0.0, parent.top() + 0.5 * cap.height, rng.uniform(-kPi, kPi));
  g.roles["cap"] = {b.add("cap", Category::Lid, pose, cap, true)};
}

void build_close_jar(SceneBuilder& b, Rng&, const RandomizerParams& p, GoalBindings& g) {
  const std::string color = b.pick_color();
  g.attributes["color"] = color;
  const Extent jar{0.07, 0.07, 0.10};
  g.roles["jar"] = {b.add(color + " jar", Category::Fixture, b.sample_free(jar, 0.06), jar, false)};
  for (const auto& c : b.other_colors(color, p.distractors)) {
    b.add(c + " jar", Category::Fixture, b.sample_free(jar, 0.06), jar, false);
  }
  const Extent lid{0.075, 0.075, 0.015};
  g.roles["lid"] = {b.add("lid", Category::Lid, b.sample_free(lid), lid, true)};
}

void build_insert_in_peg(SceneBuilder& b, Rng&, const RandomizerParams& p, GoalBindings& g) {
  const std::string color = b.pick_color();
  g.attributes["color"] = color;
  const Extent peg{0.02, 0.02, 0.10};
  // Wide spacing so a ring dropped on one peg never rests on a neighbour.
  g.roles["peg"] = {b.add(color + " peg", Category::Peg, b.sample_free(peg, 0.09), peg, false)};
  for (const auto& c : b.other_colors(color, p.distractors)) {
    b.add(c + " peg", Category::Peg, b.sample_free(peg, 0.09), peg, false);
  }
  const Extent ring{0.06, 0.06, 0.015};
  g.roles["ring"] = {b.add("square ring", Category::Ring, b.sample_free(ring), ring, true)};
}

void build_basketball_in_hoop(SceneBuilder& b, Rng&, const RandomizerParams&, GoalBindings& g) {
  const Extent hoop{0.10, 0.10, 0.20};
  g.roles["hoop"] = {b.add("hoop", Category::Container, b.sample_free(hoop), hoop, false)};
  const Extent ball{0.045, 0.045, 0.045};
  g.roles["ball"] = {b.add("basketball", Category::Block, b.sample_free(ball), ball, true)};
}

// ---------------------------------------------------------------------------
// Verification. Every predicate is expressed as a margin that must be
// >= -tolerance; positive margins mean the raw geometric condition holds.

struct Check {
  std::string name;
  double margin;
};

const ObjectState& lookup(const EnvState& s, const std::string& id) {
  const ObjectState* o = s.find(id);
  if (o == nullptr) throw std::logic_error("verify: object '" + id + "' missing from final state");
  return *o;
}

double inside_xy(const ObjectState& region, const ObjectState& o) {
  return signed_inside_distance(Footprint::of(region), {o.center().x(), o.center().y()});
}

double released(const ObjectState& o) { return o.attached() ? -kInf : kInf; }

void contained(std::vector<Check>& checks, const ObjectState& o, const ObjectState& region) {
  checks.push_back({o.name() + " released", released(o)});
  checks.push_back({o.name() + " center inside " + region.name() + " footprint", inside_xy(region, o)});
  checks.push_back({o.name() + " above " + region.name() + " bottom", o.bottom() - region.bottom()});
  checks.push_back({o.name() + " below " + region.name() + " top", region.top() - o.bottom()});
}

double hoop_ring_margin(const ObjectState& ball, const ObjectState& hoop) {
  const double rim = hoop.top();
  return std::min({inside_xy(hoop, ball), ball.center().z() - (rim - kHoopRingDepth), rim - ball.center().z()});
}

std::vector<Check> stack_checks(const TaskInstance& inst, const EnvState& s, double tolerance) {
  std::vector<Check> checks;
  const int count = std::stoi(inst.bindings.attribute("count"));
  const std::vector<std::string>& stackable = inst.bindings.role_list("stackable");
  std::vector<bool> used(stackable.size(), false);
  const ObjectState* support = &lookup(s, inst.bindings.role("target"));
  for (int level = 1; level <= count; ++level) {
    double best = -kInf;
    std::size_t best_index = stackable.size();
    for (std::size_t i = 0; i < stackable.size(); ++i) {
      if (used[i]) continue;
      const ObjectState& o = lookup(s, stackable[i]);
      if (o.attached()) continue;
      const double m = std::min(inside_xy(*support, o), -std::abs(o.bottom() - support->top()));
      if (m > best) {
        best = m;
        best_index = i;
      }
    }
    checks.push_back({"level " + std::to_string(level) + " of " + std::to_string(count) + " stacked", best});
    if (best < -tolerance || best_index == stackable.size()) break;
    used[best_index] = true;
    support = &lookup(s, stackable[best_index]);
  }
  return checks;
}

std::vector<Check> task_checks(const TaskInstance& inst, const EnvState& s,
                               std::span<const EnvState> trajectory, double tolerance) {
  const GoalBindings& g = inst.bindings;
  std::vector<Check> checks;
  switch (inst.task_id) {
    case TaskId::PutBlock: {
      const ObjectState& block = lookup(s, g.role("block"));
      const ObjectState& zone = lookup(s, g.role("zone"));
      checks.push_back({"block released", released(block)});
      checks.push_back({"block center inside target area", inside_xy(zone, block)});
      checks.push_back({"block resting on target area", -std::abs(block.bottom() - zone.top())});
      break;
    }
    case TaskId::StackBlocks:
      checks = stack_checks(inst, s, tolerance);
      break;
    case TaskId::RubbishInBin:
      contained(checks, lookup(s, g.role("rubbish")), lookup(s, g.role("bin")));
      break;
    case TaskId::EmptyContainer: {
      const ObjectState& target = lookup(s, g.role("target"));
      for (const auto& id : g.role_list("items")) contained(checks, lookup(s, id), target);
      break;
    }
    case TaskId::MeatOffGrill:
      contained(checks, lookup(s, g.role("meat")), lookup(s, g.role("area")));
      break;
    case TaskId::BasketballInHoop: {
      const ObjectState& ball = lookup(s, g.role("ball"));
      const ObjectState& hoop = lookup(s, g.role("hoop"));
      double pass = -kInf;
      for (const auto& state : trajectory) {
        pass = std::max(pass, hoop_ring_margin(lookup(state, g.role("ball")), lookup(state, g.role("hoop"))));
      }
      checks.push_back({"basketball passed through hoop ring", pass});
      checks.push_back({"basketball released", released(ball)});
      checks.push_back({"basketball inside hoop footprint", inside_xy(hoop, ball)});
      checks.push_back({"basketball below hoop ring", (hoop.top() - kHoopRingDepth) - ball.center().z()});
      break;
    }
    case TaskId::CloseJar: {
      const ObjectState& lid = lookup(s, g.role("lid"));
      const ObjectState& jar = lookup(s, g.role("jar"));
      checks.push_back({"lid released", released(lid)});
      checks.push_back({"lid centered on jar", -distance_xy(lid.center(), jar.center())});
      checks.push_back({"lid resting on jar top", -std::abs(lid.bottom() - jar.top())});
      break;
    }
    case TaskId::InsertInPeg: {
      const ObjectState& ring = lookup(s, g.role("ring"));
      const ObjectState& peg = lookup(s, g.role("peg"));
      checks.push_back({"ring released", released(ring)});
      checks.push_back({"ring centered on peg axis", -distance_xy(ring.center(), peg.center())});
      checks.push_back({"ring bottom below peg top", peg.top() - ring.bottom()});
      break;
    }
    case TaskId::OpenBottle: {
      const ObjectState& cap = lookup(s, g.role("cap"));
      const ObjectState& mount = lookup(inst.initial_state, g.role("cap"));
      const double dx = cap.center().x() - mount.center().x();
      const double dy = cap.center().y() - mount.center().y();
      const double dz = cap.center().z() - mount.center().z();
      checks.push_back({"cap displaced from bottle mount",
                        std::sqrt(dx * dx + dy * dy + dz * dz) - 2.0 * mount.size().height});
      break;
    }
  }
  return checks;
}

}  // namespace

const std::string& GoalBindings::attribute(const std::string& key) const {
  auto it = attributes.find(key);
  if (it == attributes.end()) throw std::logic_error("missing goal attribute '" + key + "'");
  return it->second;
}

const std::vector<std::string>& GoalBindings::role_list(const std::string& key) const {
  auto it = roles.find(key);
  if (it == roles.end()) throw std::logic_error("missing goal role '" + key + "'");
  return it->second;
}

const std::string& GoalBindings::role(const std::string& key) const {
  const auto& ids = role_list(key);
  if (ids.size() != 1) throw std::logic_error("goal role '" + key + "' is not a single object");
  return ids.front();
}

const std::vector<TaskSpec>& task_catalog() {
  static const std::vector<TaskSpec> catalog = [] {
    std::vector<TaskSpec> specs;
    specs.push_back(make_spec(TaskId::BasketballInHoop, "Put the basketball in the hoop.", 1, 1, 0,
                              "ball_passes_through_hoop"));
    specs.push_back(make_spec(TaskId::CloseJar, "Close the {color} jar with the lid.", 1, 1, 1,
                              "lid_on_jar"));
    specs.push_back(make_spec(TaskId::EmptyContainer,
                              "Pick all the objects from the large container and put them into the "
                              "{color} container.",
                              2, 4, 1, "all_items_in_container"));
    specs.push_back(make_spec(TaskId::InsertInPeg, "Insert the square ring into the {color} peg.", 1, 1, 2,
                              "ring_on_peg"));
    specs.push_back(make_spec(TaskId::MeatOffGrill,
                              "Pick the {meat} from the grill and place it into the designated area.", 1, 1,
                              0, "meat_in_area"));
    specs.push_back(make_spec(TaskId::OpenBottle, "Remove the cap of the wine bottle.", 1, 1, 0,
                              "cap_removed"));
    specs.push_back(make_spec(TaskId::PutBlock, "Put the block in the {color} target area.", 1, 2, 0,
                              "block_in_area"));
    specs.push_back(make_spec(TaskId::RubbishInBin, "Put the rubbish in the bin.", 1, 1, 2,
                              "rubbish_in_bin"));
    specs.push_back(make_spec(TaskId::StackBlocks, "Stack {count} {color} blocks on the target block.", 2, 3,
                              2, "stack_on_target"));
    return specs;
  }();
  return catalog;
}

const TaskSpec& task_spec(TaskId id) {
  for (const auto& s : task_catalog()) {
    if (s.id == id) return s;
  }
  throw std::logic_error("unknown task id");
}

Pose gripper_start_pose() { return Pose(0.0, 0.0, 0.5, 0.0); }

std::string resolve_description(const std::string& tpl, const GoalBindings& bindings) {
  std::string out;
  out.reserve(tpl.size());
  for (std::size_t i = 0; i < tpl.size();) {
    if (tpl[i] == '{') {
      const auto close = tpl.find('}', i);
      if (close != std::string::npos) {
        auto it = bindings.attributes.find(tpl.substr(i + 1, close - i - 1));
        if (it != bindings.attributes.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tpl[i++]);
  }
  return out;
}

Result<TaskInstance, RandomizeError> randomize(const TaskSpec& spec, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x7a5c, static_cast<std::uint64_t>(spec.id)}));
  SceneBuilder builder(rng, spec.randomizer);
  GoalBindings bindings;
  try {
    switch (spec.id) {
      case TaskId::PutBlock: build_put_block(builder, rng, spec.randomizer, bindings); break;
      case TaskId::StackBlocks: build_stack_blocks(builder, rng, spec.randomizer, bindings); break;
      case TaskId::RubbishInBin: build_rubbish_in_bin(builder, rng, spec.randomizer, bindings); break;
      case TaskId::EmptyContainer: build_empty_container(builder, rng, spec.randomizer, bindings); break;
      case TaskId::MeatOffGrill: build_meat_off_grill(builder, rng, spec.randomizer, bindings); break;
      case TaskId::OpenBottle: build_open_bottle(builder, rng, spec.randomizer, bindings); break;
      case TaskId::CloseJar: build_close_jar(builder, rng, spec.randomizer, bindings); break;
      case TaskId::InsertInPeg: build_insert_in_peg(builder, rng, spec.randomizer, bindings); break;
      case TaskId::BasketballInHoop: build_basketball_in_hoop(builder, rng, spec.randomizer, bindings); break;
    }
  } catch (const SceneBuilder::PlacementFailed&) {
    return unexpected(RandomizeError{RandomizeErrorKind::PlacementExhausted,
                                     std::string(to_string(spec.id)) + ": no free placement after " +
                                         std::to_string(kPlacementAttempts) + " attempts"});
  }

  TaskInstance inst{spec.id, seed, resolve_description(spec.description_template, bindings),
                    EnvState(builder.take(), gripper_start_pose(), true), std::move(bindings)};
  if (inst.description.find('{') != std::string::npos) {
    throw std::logic_error("task description has unresolved placeholders");
  }
  if (!support_check(inst.initial_state, SimConfig{})) {
    throw std::logic_error("randomized scene violates the support invariant");
  }
  return inst;
}

Verdict verify(const TaskInstance& instance, const EnvState& final_state, std::span<const EnvState> trajectory,
               double tolerance) {
  for (const auto& check : task_checks(instance, final_state, trajectory, tolerance)) {
    if (!(check.margin >= -tolerance)) {
      char buf[64];
      if (std::isfinite(check.margin)) {
        std::snprintf(buf, sizeof buf, " (margin %.4f m)", check.margin);
      } else {
        buf[0] = '\0';
      }
      return Verdict{false, "failed: " + check.name + buf};
    }
  }
  return Verdict{true, {}};
}

std::string task_manifest_json() {
  nlohmann::ordered_json tasks = nlohmann::ordered_json::array();
  for (const auto& spec : task_catalog()) {
    const auto& r = spec.randomizer;
    tasks.push_back({
        {"task_id", to_string(spec.id)},
        {"description_template", spec.description_template},
        {"verifier", spec.verifier_name},
        {"randomizer",
         {{"spawn_region", {{"min_x", r.spawn_min_x}, {"max_x", r.spawn_max_x},
                            {"min_y", r.spawn_min_y}, {"max_y", r.spawn_max_y}}},
          {"colors", r.colors},
          {"count", {{"min", r.min_count}, {"max", r.max_count}, {"meaning", count_meaning(spec.id)}}},
          {"distractors", r.distractors}}},
    });
  }
  nlohmann::ordered_json doc = {{"verify_tolerance_m", kVerifyTolerance}, {"tasks", tasks}};
  return doc.dump(2) + "\n";
}

}  // namespace simboot
