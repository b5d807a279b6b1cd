#pragma once

#include <string>
#include <string_view>

#include "simboot/model.hpp"
#include "simboot/result.hpp"
#include "simboot/tasks.hpp"

namespace simboot {

/// Planner prompt text holding the four markers {{TASK}}, {{EE_POSITION}},
/// {{EE_ORIENTATION}} and {{STATE}}, each exactly once. Throws ModelError
/// otherwise.
class PromptTemplate {
 public:
  explicit PromptTemplate(std::string text);

  /// The shipped template (also installed as share/prompt_template.txt).
  static PromptTemplate default_template();

  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

/// Text of the shipped template.
std::string_view default_template_text();

inline constexpr std::string_view kTaskMarker = "{{TASK}}";
inline constexpr std::string_view kEePositionMarker = "{{EE_POSITION}}";
inline constexpr std::string_view kEeOrientationMarker = "{{EE_ORIENTATION}}";
inline constexpr std::string_view kStateMarker = "{{STATE}}";

/// One line per object, sorted by id:
///   name: center=(x, y, z), yaw=r, size=(l, w, h)
/// with 4 decimals. Empty scene gives the empty string.
std::string serialize_state(const EnvState& state);

enum class PromptErrorKind { UnresolvedPlaceholder };

struct PromptError {
  PromptErrorKind kind = PromptErrorKind::UnresolvedPlaceholder;
  std::string message;
};

/// Prompt for `instance` as seen through `observed` (the ground-truth
/// initial state, or a fused estimate of it).
Result<std::string, PromptError> build_prompt(const PromptTemplate& tmpl, const TaskInstance& instance,
                                              const EnvState& observed);

/// Prompt built from the instance's ground-truth initial state.
Result<std::string, PromptError> build_prompt(const PromptTemplate& tmpl, const TaskInstance& instance);

}  // namespace simboot
