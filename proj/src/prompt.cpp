#include "simboot/prompt.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

namespace simboot {

namespace {

// Kept byte-identical to share/prompt_template.txt (checked by the tests).
constexpr std::string_view kDefaultTemplate = R"TEMPLATE(You are a robot manipulation planner for a single parallel-jaw gripper above a tabletop.
Your job is to write a plan that solves the task below using only the three primitives listed here.

Primitives:
  open_gripper()                     -- open the jaws; releases any held object
  close_gripper()                    -- close the jaws; grasps the object between them, if any
  move_gripper(x, y, z, yaw)         -- move the gripper palm to (x, y, z) with rotation yaw about the vertical axis

Units and frame:
  All positions are in meters and all angles are in radians.
  The table surface is the plane z = 0; z points up. The workspace is x, y in [-0.5, 0.5] and z in [0, 0.8].
  The jaws close along the direction yaw + pi/2 and open at most 0.08 m.
  An object is grasped when its center is within 0.015 m (horizontally) of the palm and its top face lies between the palm and 0.04 m below it.
  A held object moves rigidly with the gripper and drops onto the surface below it when released.

Output format:
  Reply with one fenced code block containing only primitive calls, one per line.
  Numbers are plain decimals (for example 0.125 or -1.5708). Lines starting with # are comments.
  Do not write any other code, loops, or variables.

Task: {{TASK}}

Current gripper position (x, y, z): {{EE_POSITION}}
Current gripper yaw: {{EE_ORIENTATION}}

Current state of the environment (one object per line; center and size in meters, yaw in radians):
{{STATE}}
)TEMPLATE";

std::size_t count_occurrences(std::string_view text, std::string_view marker) {
  std::size_t n = 0;
  for (auto pos = text.find(marker); pos != std::string_view::npos; pos = text.find(marker, pos + marker.size())) {
    ++n;
  }
  return n;
}

std::string fixed4(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s(buf);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

void replace_once(std::string& text, std::string_view marker, const std::string& value) {
  const auto pos = text.find(marker);
  if (pos != std::string::npos) text.replace(pos, marker.size(), value);
}

}  // namespace

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  for (auto marker : {kTaskMarker, kEePositionMarker, kEeOrientationMarker, kStateMarker}) {
    if (count_occurrences(text_, marker) != 1) {
      throw ModelError("prompt template must contain " + std::string(marker) + " exactly once");
    }
  }
}

PromptTemplate PromptTemplate::default_template() { return PromptTemplate(std::string(kDefaultTemplate)); }

std::string_view default_template_text() { return kDefaultTemplate; }

std::string serialize_state(const EnvState& state) {
  std::vector<const ObjectState*> sorted;
  for (const auto& o : state.objects()) sorted.push_back(&o);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->id() < b->id(); });
  std::string out;
  for (const auto* o : sorted) {
    const Pose& c = o->center();
    const Extent& s = o->size();
    out += o->name() + ": center=(" + fixed4(c.x()) + ", " + fixed4(c.y()) + ", " + fixed4(c.z()) +
           "), yaw=" + fixed4(c.yaw()) + ", size=(" + fixed4(s.length) + ", " + fixed4(s.width) + ", " +
           fixed4(s.height) + ")\n";
  }
  return out;
}

Result<std::string, PromptError> build_prompt(const PromptTemplate& tmpl, const TaskInstance& instance,
                                              const EnvState& observed) {
  const Pose& ee = observed.gripper_pose();
  std::string text = tmpl.text();
  // The state goes last so scene text can never be mistaken for a marker.
  replace_once(text, kTaskMarker, instance.description);
  replace_once(text, kEePositionMarker, "(" + fixed4(ee.x()) + ", " + fixed4(ee.y()) + ", " + fixed4(ee.z()) + ")");
  replace_once(text, kEeOrientationMarker, fixed4(ee.yaw()));
  const std::string before_state = text;
  for (auto marker : {kTaskMarker, kEePositionMarker, kEeOrientationMarker}) {
    if (before_state.find(marker) != std::string::npos) {
      return unexpected(PromptError{PromptErrorKind::UnresolvedPlaceholder,
                                    "marker " + std::string(marker) + " left unresolved"});
    }
  }
  if (instance.description.find('{') != std::string::npos) {
    return unexpected(PromptError{PromptErrorKind::UnresolvedPlaceholder,
                                  "task description has an unresolved placeholder: " + instance.description});
  }
  replace_once(text, kStateMarker, serialize_state(observed));
  return text;
}

Result<std::string, PromptError> build_prompt(const PromptTemplate& tmpl, const TaskInstance& instance) {
  return build_prompt(tmpl, instance, instance.initial_state);
}

}  // namespace simboot
