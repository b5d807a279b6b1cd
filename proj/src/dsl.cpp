#include "simboot/dsl.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>

namespace simboot::dsl {

namespace {

struct Line {
  std::size_t number;  // 1-based
  std::string_view text;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_ident(char c) { return is_ident_start(c) || is_digit(c); }

char lower(char c) { return (c >= 'A' && c <= 'Z') ? char(c - 'A' + 'a') : c; }

std::vector<Line> split_lines(std::string_view source) {
  std::vector<Line> lines;
  std::size_t start = 0;
  std::size_t number = 1;
  while (start <= source.size()) {
    std::size_t end = source.find('\n', start);
    if (end == std::string_view::npos) end = source.size();
    std::string_view text = source.substr(start, end - start);
    if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
    lines.push_back({number++, text});
    if (end == source.size()) break;
    start = end + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool is_fence_opener(std::string_view line) {
  std::string_view t = trim(line);
  if (t.substr(0, 3) != "```") return false;
  t.remove_prefix(3);
  return std::all_of(t.begin(), t.end(), [](char c) {
    return is_ident(c) || c == '-' || c == '+' || c == '.' || c == '#';
  });
}

bool is_fence_closer(std::string_view line) { return trim(line) == "```"; }

// Lines that carry the program: the first fenced block if one exists,
// otherwise everything.
std::vector<Line> program_lines(std::string_view source) {
  std::vector<Line> lines = split_lines(source);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!is_fence_opener(lines[i].text)) continue;
    std::vector<Line> body;
    for (std::size_t j = i + 1; j < lines.size() && !is_fence_closer(lines[j].text); ++j) {
      body.push_back(lines[j]);
    }
    return body;
  }
  return lines;
}

bool is_decimal_literal(std::string_view s) {
  std::size_t i = 0;
  const std::size_t n = s.size();
  if (i < n && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t digits = 0;
  while (i < n && is_digit(s[i])) ++i, ++digits;
  if (i < n && s[i] == '.') {
    ++i;
    while (i < n && is_digit(s[i])) ++i, ++digits;
  }
  if (digits == 0) return false;
  if (i < n && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < n && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < n && is_digit(s[i])) ++i, ++exp_digits;
    if (exp_digits == 0) return false;
  }
  return i == n;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

class LineParser {
 public:
  LineParser(const Line& line, std::vector<ParseDiagnostic>& diags) : line_(line), diags_(diags) {}

  // Returns the command on success; nullopt if the line is blank or invalid
  // (diagnostics recorded). `statement_column` receives the start column.
  std::optional<Command> run(bool& is_statement, std::size_t& statement_column) {
    is_statement = false;
    std::string_view text = line_.text;
    if (auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
    std::size_t p = 0;
    while (p < text.size() && is_space(text[p])) ++p;
    if (p == text.size()) return std::nullopt;
    text_ = text;
    is_statement = true;
    statement_column = p + 1;

    if (!is_ident_start(text[p])) {
      error(p, DiagnosticCode::Syntax, "expected a statement (open_gripper, close_gripper or move_gripper)");
      return std::nullopt;
    }
    std::size_t q = p;
    while (q < text.size() && is_ident(text[q])) ++q;
    std::string name;
    for (std::size_t i = p; i < q; ++i) name.push_back(lower(text[i]));
    int arity = -1;
    if (name == "open_gripper" || name == "close_gripper") arity = 0;
    if (name == "move_gripper") arity = 4;
    if (arity < 0) {
      error(p, DiagnosticCode::UnknownStatement, "unknown statement '" + std::string(text.substr(p, q - p)) + "'");
      return std::nullopt;
    }

    std::size_t r = q;
    while (r < text.size() && is_space(text[r])) ++r;
    if (r == text.size() || text[r] != '(') {
      error(r, DiagnosticCode::Syntax, "expected '(' after '" + name + "'");
      return std::nullopt;
    }
    const std::size_t close = text.find(')', r + 1);
    if (close == std::string_view::npos) {
      error(r, DiagnosticCode::Syntax, "missing ')'");
      return std::nullopt;
    }
    if (close + 1 != text.size()) {
      std::size_t t = close + 1;
      while (t < text.size() && is_space(text[t])) ++t;
      error(t, DiagnosticCode::Syntax, "unexpected text after ')'");
      return std::nullopt;
    }

    struct Arg {
      std::string_view text;
      std::size_t offset;
    };
    std::vector<Arg> args;
    const std::string_view inner = text.substr(r + 1, close - r - 1);
    if (!trim(inner).empty()) {
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = inner.find(',', start);
        const std::size_t end = comma == std::string_view::npos ? inner.size() : comma;
        std::string_view raw = inner.substr(start, end - start);
        std::size_t lead = 0;
        while (lead < raw.size() && is_space(raw[lead])) ++lead;
        args.push_back({trim(raw), r + 1 + start + lead});
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
    }
    if (static_cast<int>(args.size()) != arity) {
      error(p, DiagnosticCode::ArityMismatch,
            name + " expects " + std::to_string(arity) + " argument" + (arity == 1 ? "" : "s") + ", got " +
                std::to_string(args.size()));
      return std::nullopt;
    }
    if (arity == 0) {
      if (name == "open_gripper") return Command{OpenGripper{}};
      return Command{CloseGripper{}};
    }

    double values[4] = {};
    bool ok = true;
    for (std::size_t i = 0; i < 4; ++i) {
      const Arg& a = args[i];
      const std::size_t col = std::min(a.offset, text.size() - 1);
      if (a.text.empty()) {
        error(col, DiagnosticCode::NonNumericLiteral, "empty argument " + std::to_string(i + 1));
        ok = false;
        continue;
      }
      if (!is_decimal_literal(a.text)) {
        error(col, DiagnosticCode::NonNumericLiteral,
              "'" + std::string(a.text) + "' is not a decimal literal (meters / radians)");
        ok = false;
        continue;
      }
      std::string_view digits = a.text;
      if (digits.front() == '+') digits.remove_prefix(1);
      double v = 0.0;
      auto res = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (res.ec != std::errc{} || !std::isfinite(v) || std::abs(v) > kMaxLiteralMagnitude) {
        error(col, DiagnosticCode::LiteralOutOfRange, "'" + std::string(a.text) + "' is out of range");
        ok = false;
        continue;
      }
      values[i] = v;
    }
    if (!ok) return std::nullopt;
    return Command{MoveGripper{Pose(quantize(values[0]), quantize(values[1]), quantize(values[2]),
                                    quantize_yaw(values[3]))}};
  }

 private:
  void error(std::size_t offset, DiagnosticCode code, std::string message) {
    const std::size_t col = text_.empty() ? 1 : std::min(offset, text_.size() - 1) + 1;
    diags_.push_back({line_.number, col, std::move(message), Severity::Error, code});
  }

  const Line& line_;
  std::vector<ParseDiagnostic>& diags_;
  std::string_view text_;
};

}  // namespace

double quantize(double value) { return std::round(value * 1e6) / 1e6; }

double quantize_yaw(double yaw) {
  // Grid points nearest +-pi: 3.141592 < pi and -3.141592 > -pi.
  constexpr double kEdge = -3.141592;
  double q = quantize(normalize_yaw(yaw));
  if (q >= std::numbers::pi || q < -std::numbers::pi) q = kEdge;
  return q;
}

std::string format(const ParseDiagnostic& d) {
  return std::to_string(d.line) + ":" + std::to_string(d.column) + ": " +
         (d.severity == Severity::Error ? "error: " : "warning: ") + d.message;
}

std::string strip_fences(std::string_view source) {
  std::string out;
  for (const auto& l : program_lines(source)) {
    out.append(l.text);
    out.push_back('\n');
  }
  return out;
}

Result<Plan, std::vector<ParseDiagnostic>> parse(std::string_view source) {
  std::vector<ParseDiagnostic> diags;
  std::vector<Command> commands;
  std::vector<SourcePos> positions;
  std::size_t statements = 0;
  bool cap_reported = false;

  for (const auto& line : program_lines(source)) {
    bool is_statement = false;
    std::size_t column = 1;
    LineParser parser(line, diags);
    auto cmd = parser.run(is_statement, column);
    if (!is_statement) continue;
    if (++statements > kMaxPlanCommands && !cap_reported) {
      diags.push_back({line.number, column,
                       "plan exceeds the " + std::to_string(kMaxPlanCommands) + "-command limit",
                       Severity::Error, DiagnosticCode::PlanTooLong});
      cap_reported = true;
    }
    if (cmd && statements <= kMaxPlanCommands) {
      commands.push_back(*cmd);
      positions.push_back({line.number, column});
    }
  }
  if (!diags.empty()) return unexpected(std::move(diags));
  return Plan(std::move(commands), std::string(source), std::move(positions));
}

std::vector<ParseDiagnostic> validate(const Plan& plan, const Bounds& workspace) {
  std::vector<ParseDiagnostic> warnings;
  if (plan.empty()) {
    warnings.push_back({1, 1, "plan has no commands", Severity::Warning, DiagnosticCode::EmptyPlan});
    return warnings;
  }
  int last_gripper = -1;  // index into the Command variant of the last open/close
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const Command& c = plan.commands()[i];
    const SourcePos& pos = plan.positions()[i];
    if (const auto* m = std::get_if<MoveGripper>(&c)) {
      if (!workspace.contains(m->target.x(), m->target.y(), m->target.z())) {
        warnings.push_back({pos.line, pos.column, "move_gripper target outside the workspace", Severity::Warning,
                            DiagnosticCode::OutOfWorkspace});
      }
      continue;
    }
    const int kind = static_cast<int>(c.index());
    if (kind == last_gripper) {
      warnings.push_back({pos.line, pos.column,
                          std::string(kind == 0 ? "open_gripper" : "close_gripper") +
                              " repeats the previous gripper command",
                          Severity::Warning, DiagnosticCode::RedundantGripperCommand});
    }
    last_gripper = kind;
  }
  return warnings;
}

std::string pretty_print(const Command& command) {
  return std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, OpenGripper>) {
          return "open_gripper()";
        } else if constexpr (std::is_same_v<T, CloseGripper>) {
          return "close_gripper()";
        } else {
          const Pose& p = c.target;
          return "move_gripper(" + fixed6(p.x()) + ", " + fixed6(p.y()) + ", " + fixed6(p.z()) + ", " +
                 fixed6(p.yaw()) + ")";
        }
      },
      command);
}

std::string pretty_print(const Plan& plan) {
  std::string out;
  for (const auto& c : plan.commands()) {
    out += pretty_print(c);
    out.push_back('\n');
  }
  return out;
}

}  // namespace simboot::dsl
