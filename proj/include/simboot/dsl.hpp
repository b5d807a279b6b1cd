#pragma once

// Plan command language.
//
//   program    = { line } ;
//   line       = [ statement ] [ comment ] newline ;
//   statement  = "open_gripper" "(" ")"
//              | "close_gripper" "(" ")"
//              | "move_gripper" "(" number "," number "," number "," number ")" ;
//   number     = [ "+" | "-" ] ( digits [ "." [ digits ] ] | "." digits ) [ exponent ] ;
//   exponent   = ( "e" | "E" ) [ "+" | "-" ] digits ;
//   comment    = "#" { any character } ;
//
// move_gripper takes x, y, z in meters and yaw in radians. Statement names are
// matched case-insensitively. If the text contains a ``` fence, only the first
// fenced block is parsed. Numbers are held on a 1e-6 grid, so the canonical
// printout parses back to the identical command list.

#include <string>
#include <string_view>
#include <vector>

#include "simboot/model.hpp"
#include "simboot/result.hpp"

namespace simboot::dsl {

enum class Severity { Error, Warning };

enum class DiagnosticCode {
  Syntax,
  UnknownStatement,
  ArityMismatch,
  NonNumericLiteral,
  LiteralOutOfRange,
  PlanTooLong,
  OutOfWorkspace,
  RedundantGripperCommand,
  EmptyPlan,
};

struct ParseDiagnostic {
  std::size_t line = 1;    // 1-based
  std::size_t column = 1;  // 1-based byte column
  std::string message;
  Severity severity = Severity::Error;
  DiagnosticCode code = DiagnosticCode::Syntax;
};

std::string format(const ParseDiagnostic& d);

/// Largest accepted literal magnitude.
inline constexpr double kMaxLiteralMagnitude = 1e6;

/// Rounds to the 1e-6 grid used for all plan coordinates.
double quantize(double value);
/// Grid value for a yaw, wrapped into [-pi, pi).
double quantize_yaw(double yaw);

/// Total: never throws on any input; every failure yields at least one
/// Error diagnostic.
Result<Plan, std::vector<ParseDiagnostic>> parse(std::string_view source);

/// Static warnings: out-of-workspace targets, repeated open/close with no
/// opposite command between them, and empty plans.
std::vector<ParseDiagnostic> validate(const Plan& plan, const Bounds& workspace);

/// Canonical text: one lowercase statement per line, ", " separators,
/// 6 decimals, no comments.
std::string pretty_print(const Plan& plan);
std::string pretty_print(const Command& command);

/// Removes the first ``` fenced block wrapper, if any.
std::string strip_fences(std::string_view source);

}  // namespace simboot::dsl
