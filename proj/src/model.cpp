#include "simboot/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

namespace simboot {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ModelError(what);
}

std::int64_t quantize(double v) { return std::llround(v / kDigestQuantum); }

}  // namespace

double normalize_yaw(double angle) {
  require(std::isfinite(angle), "yaw must be finite");
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= std::numbers::pi;
  // fmod can land exactly on +pi after the shift back.
  if (r >= std::numbers::pi) r -= kTwoPi;
  if (r < -std::numbers::pi) r = -std::numbers::pi;
  return r;
}

Pose::Pose(double x, double y, double z, double yaw) : x_(x), y_(y), z_(z) {
  require(std::isfinite(x) && std::isfinite(y) && std::isfinite(z), "pose coordinates must be finite");
  yaw_ = normalize_yaw(yaw);
}

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Block: return "block";
    case Category::Container: return "container";
    case Category::TargetZone: return "target_zone";
    case Category::Lid: return "lid";
    case Category::Peg: return "peg";
    case Category::Ring: return "ring";
    case Category::Fixture: return "fixture";
  }
  return "block";
}

std::optional<Category> category_from_string(std::string_view s) {
  for (auto c : {Category::Block, Category::Container, Category::TargetZone, Category::Lid,
                 Category::Peg, Category::Ring, Category::Fixture}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

ObjectState::ObjectState(std::string id, std::string name, Category category, Pose center,
                         Extent size, bool graspable, bool attached)
    : id_(std::move(id)),
      name_(std::move(name)),
      category_(category),
      center_(center),
      size_(size),
      graspable_(graspable),
      attached_(attached) {
  require(!id_.empty(), "object id must be non-empty");
  require(std::isfinite(size_.length) && std::isfinite(size_.width) && std::isfinite(size_.height),
          "object extent must be finite");
  require(size_.length > 0 && size_.width > 0 && size_.height > 0, "object extent must be positive");
  require(!(graspable_ && (category_ == Category::TargetZone || category_ == Category::Fixture)),
          "target zones and fixtures are never graspable");
  require(!attached_ || graspable_, "only graspable objects can be attached");
}

ObjectState ObjectState::moved_to(const Pose& center) const {
  ObjectState copy = *this;
  copy.center_ = center;
  return copy;
}

ObjectState ObjectState::with_attached(bool attached) const {
  return ObjectState(id_, name_, category_, center_, size_, graspable_, attached);
}

ObjectState ObjectState::with_size(const Extent& size) const {
  return ObjectState(id_, name_, category_, center_, size, graspable_, attached_);
}

bool Bounds::contains(double x, double y, double z) const {
  return x >= min[0] && x <= max[0] && y >= min[1] && y <= max[1] && z >= min[2] && z <= max[2];
}

Bounds default_workspace() { return Bounds{{-0.5, -0.5, 0.0}, {0.5, 0.5, 0.8}}; }

EnvState::EnvState(std::vector<ObjectState> objects, Pose gripper_pose, bool gripper_open,
                   Bounds workspace)
    : objects_(std::move(objects)),
      gripper_pose_(gripper_pose),
      gripper_open_(gripper_open),
      workspace_(workspace) {
  for (int a = 0; a < 3; ++a) {
    require(std::isfinite(workspace_.min[a]) && std::isfinite(workspace_.max[a]) &&
                workspace_.min[a] < workspace_.max[a],
            "workspace bounds must be finite with min < max");
  }
  std::unordered_set<std::string_view> ids;
  int attached = 0;
  for (const auto& o : objects_) {
    require(ids.insert(o.id()).second, "object ids must be unique");
    if (o.attached()) ++attached;
  }
  require(attached <= 1, "at most one object can be attached");
}

const ObjectState* EnvState::find(std::string_view id) const {
  for (const auto& o : objects_) {
    if (o.id() == id) return &o;
  }
  return nullptr;
}

std::optional<std::size_t> EnvState::attached_index() const {
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    if (objects_[i].attached()) return i;
  }
  return std::nullopt;
}

EnvState EnvState::with_objects(std::vector<ObjectState> objects) const {
  return EnvState(std::move(objects), gripper_pose_, gripper_open_, workspace_);
}

EnvState EnvState::with_gripper(const Pose& pose, bool open) const {
  EnvState copy = *this;
  copy.gripper_pose_ = pose;
  copy.gripper_open_ = open;
  return copy;
}

Digest state_digest(const EnvState& state) {
  std::vector<const ObjectState*> sorted;
  sorted.reserve(state.objects().size());
  for (const auto& o : state.objects()) sorted.push_back(&o);
  std::sort(sorted.begin(), sorted.end(),
            [](const ObjectState* a, const ObjectState* b) { return a->id() < b->id(); });

  Hasher h;
  auto pose = [&h](const Pose& p) {
    h.update_i64(quantize(p.x())).update_i64(quantize(p.y())).update_i64(quantize(p.z()));
    h.update_i64(quantize(p.yaw()));
  };
  h.update_field("envstate/v1");
  h.update_u64(sorted.size());
  for (const auto* o : sorted) {
    h.update_field(o->id()).update_field(o->name()).update_field(to_string(o->category()));
    pose(o->center());
    h.update_i64(quantize(o->size().length))
        .update_i64(quantize(o->size().width))
        .update_i64(quantize(o->size().height));
    h.update_u64((o->graspable() ? 1U : 0U) | (o->attached() ? 2U : 0U));
  }
  pose(state.gripper_pose());
  h.update_u64(state.gripper_open() ? 1 : 0);
  for (int a = 0; a < 3; ++a) {
    h.update_i64(quantize(state.workspace().min[a])).update_i64(quantize(state.workspace().max[a]));
  }
  return h.finish();
}

std::string_view to_string(TaskId id) {
  switch (id) {
    case TaskId::BasketballInHoop: return "basketball_in_hoop";
    case TaskId::CloseJar: return "close_jar";
    case TaskId::EmptyContainer: return "empty_container";
    case TaskId::InsertInPeg: return "insert_in_peg";
    case TaskId::MeatOffGrill: return "meat_off_grill";
    case TaskId::OpenBottle: return "open_bottle";
    case TaskId::PutBlock: return "put_block";
    case TaskId::RubbishInBin: return "rubbish_in_bin";
    case TaskId::StackBlocks: return "stack_blocks";
  }
  return "put_block";
}

std::optional<TaskId> task_from_string(std::string_view s) {
  for (auto t : kAllTasks) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

Plan::Plan(std::vector<Command> commands, std::string source_text, std::vector<SourcePos> positions)
    : commands_(std::move(commands)), source_text_(std::move(source_text)), positions_(std::move(positions)) {
  require(commands_.size() <= kMaxPlanCommands, "plan exceeds the 100-command cap");
  if (positions_.empty()) {
    for (std::size_t i = 0; i < commands_.size(); ++i) positions_.push_back({i + 1, 1});
  }
  require(positions_.size() == commands_.size(), "plan positions must match commands");
}

std::string_view to_string(EpisodeVerdict v) {
  switch (v) {
    case EpisodeVerdict::Success: return "success";
    case EpisodeVerdict::TaskFailure: return "task_failure";
    case EpisodeVerdict::ParseError: return "parse_error";
    case EpisodeVerdict::ExecutionError: return "execution_error";
    case EpisodeVerdict::Timeout: return "timeout";
  }
  return "task_failure";
}

}  // namespace simboot
