#pragma once

// Scene, plan and dataset value types shared by every module.
//
// Every type validates on construction and throws ModelError when an invariant
// does not hold. The only silent adjustment is yaw, which is wrapped into
// [-pi, pi).

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "simboot/digest.hpp"

namespace simboot {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Wraps an angle into [-pi, pi). Throws ModelError on NaN/inf.
double normalize_yaw(double angle);

/// Gripper or object pose: position in meters (table plane at z = 0) and yaw
/// about +z in radians.
class Pose {
 public:
  Pose() = default;
  Pose(double x, double y, double z, double yaw);

  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  double yaw() const { return yaw_; }

  friend bool operator==(const Pose&, const Pose&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
  double yaw_ = 0.0;
};

struct Extent {
  double length = 0.0;  // along the object's local x
  double width = 0.0;   // along the object's local y
  double height = 0.0;

  friend bool operator==(const Extent&, const Extent&) = default;
};

enum class Category { Block, Container, TargetZone, Lid, Peg, Ring, Fixture };

std::string_view to_string(Category c);
std::optional<Category> category_from_string(std::string_view s);

/// One yaw-rotated cuboid in the scene.
class ObjectState {
 public:
  ObjectState(std::string id, std::string name, Category category, Pose center, Extent size,
              bool graspable, bool attached = false);

  const std::string& id() const { return id_; }
  const std::string& name() const { return name_; }
  Category category() const { return category_; }
  const Pose& center() const { return center_; }
  const Extent& size() const { return size_; }
  bool graspable() const { return graspable_; }
  // Set while the object is held by the (single) gripper.
  bool attached() const { return attached_; }

  double bottom() const { return center_.z() - 0.5 * size_.height; }
  double top() const { return center_.z() + 0.5 * size_.height; }

  ObjectState moved_to(const Pose& center) const;
  ObjectState with_attached(bool attached) const;
  ObjectState with_size(const Extent& size) const;

  friend bool operator==(const ObjectState&, const ObjectState&) = default;

 private:
  std::string id_;
  std::string name_;
  Category category_ = Category::Block;
  Pose center_;
  Extent size_;
  bool graspable_ = false;
  bool attached_ = false;
};

/// Axis-aligned box, min/max per axis.
struct Bounds {
  std::array<double, 3> min{};
  std::array<double, 3> max{};

  bool contains(double x, double y, double z) const;
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

Bounds default_workspace();

/// Full scene: the K objects plus gripper pose and aperture state.
class EnvState {
 public:
  EnvState(std::vector<ObjectState> objects, Pose gripper_pose, bool gripper_open,
           Bounds workspace = default_workspace());

  std::span<const ObjectState> objects() const { return objects_; }
  const Pose& gripper_pose() const { return gripper_pose_; }
  bool gripper_open() const { return gripper_open_; }
  const Bounds& workspace() const { return workspace_; }

  const ObjectState* find(std::string_view id) const;
  std::optional<std::size_t> attached_index() const;

  EnvState with_objects(std::vector<ObjectState> objects) const;
  EnvState with_gripper(const Pose& pose, bool open) const;

  friend bool operator==(const EnvState&, const EnvState&) = default;

 private:
  std::vector<ObjectState> objects_;
  Pose gripper_pose_;
  bool gripper_open_ = true;
  Bounds workspace_;
};

/// Canonical hash of a scene: objects sorted by id, all lengths and angles
/// quantized to 1e-6.
Digest state_digest(const EnvState& state);

inline constexpr double kDigestQuantum = 1e-6;

// ---------------------------------------------------------------------------
// Tasks

enum class TaskId {
  BasketballInHoop,
  CloseJar,
  EmptyContainer,
  InsertInPeg,
  MeatOffGrill,
  OpenBottle,
  PutBlock,
  RubbishInBin,
  StackBlocks,
};

inline constexpr std::array<TaskId, 9> kAllTasks = {
    TaskId::BasketballInHoop, TaskId::CloseJar,    TaskId::EmptyContainer,
    TaskId::InsertInPeg,      TaskId::MeatOffGrill, TaskId::OpenBottle,
    TaskId::PutBlock,         TaskId::RubbishInBin, TaskId::StackBlocks,
};

std::string_view to_string(TaskId id);
std::optional<TaskId> task_from_string(std::string_view s);

struct RandomizerParams {
  double spawn_min_x = -0.3;
  double spawn_max_x = 0.3;
  double spawn_min_y = -0.3;
  double spawn_max_y = 0.3;
  std::vector<std::string> colors;
  // Task-specific count range (blocks to stack, items to transfer, ...).
  int min_count = 1;
  int max_count = 1;
  int distractors = 0;
};

struct TaskSpec {
  TaskId id;
  std::string description_template;  // `{name}` placeholders resolved from goal bindings
  RandomizerParams randomizer;
  std::string verifier_name;
};

// ---------------------------------------------------------------------------
// Plans

struct OpenGripper {
  friend bool operator==(const OpenGripper&, const OpenGripper&) = default;
};
struct CloseGripper {
  friend bool operator==(const CloseGripper&, const CloseGripper&) = default;
};
struct MoveGripper {
  Pose target;
  friend bool operator==(const MoveGripper&, const MoveGripper&) = default;
};

using Command = std::variant<OpenGripper, CloseGripper, MoveGripper>;

inline constexpr std::size_t kMaxPlanCommands = 100;

/// 1-based line/column of a command in its source text.
struct SourcePos {
  std::size_t line = 1;
  std::size_t column = 1;
  friend bool operator==(const SourcePos&, const SourcePos&) = default;
};

class Plan {
 public:
  Plan() = default;
  // Without explicit positions, command i is assumed to start line i + 1.
  Plan(std::vector<Command> commands, std::string source_text, std::vector<SourcePos> positions = {});

  const std::vector<Command>& commands() const { return commands_; }
  const std::string& source_text() const { return source_text_; }
  const std::vector<SourcePos>& positions() const { return positions_; }
  std::size_t size() const { return commands_.size(); }
  bool empty() const { return commands_.empty(); }

 private:
  std::vector<Command> commands_;
  std::string source_text_;
  std::vector<SourcePos> positions_;
};

// ---------------------------------------------------------------------------
// Episodes and dataset records

enum class EpisodeVerdict { Success, TaskFailure, ParseError, ExecutionError, Timeout };

std::string_view to_string(EpisodeVerdict v);

struct TraceEntry {
  std::size_t command_index = 0;
  Digest digest;
};

struct Episode {
  TaskId task_id = TaskId::PutBlock;
  std::uint64_t seed = 0;
  EnvState initial_state{{}, Pose{}, true};
  std::string prompt;
  std::string raw_completion;
  std::optional<Plan> plan;
  std::vector<TraceEntry> trace;
  EpisodeVerdict verdict = EpisodeVerdict::TaskFailure;
  std::string reason;
  bool planner_error = false;
  std::optional<Digest> final_digest;
};

struct SftRecord {
  std::string prompt;
  std::string completion;
  TaskId task_id = TaskId::PutBlock;
  std::uint64_t seed = 0;
  Digest verifier_digest;

  friend bool operator==(const SftRecord&, const SftRecord&) = default;
};

}  // namespace simboot
