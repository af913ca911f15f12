#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepeval/report_parser.h"

namespace deepeval {

/// The mechanically decidable presentation rules.
///   P3  every reference entry is cited in the text
///   P4  every numbered in-text citation has a reference entry
///   P5  exactly one references section
///   P9  markdown headings instead of bold titles; tables are well formed
///   P10 numbered references have no gaps and no duplicates
enum class RuleId { kP3, kP4, kP5, kP9, kP10 };

inline constexpr std::array<RuleId, 5> kAllRules{RuleId::kP3, RuleId::kP4, RuleId::kP5, RuleId::kP9,
                                                 RuleId::kP10};

std::string_view RuleName(RuleId rule);

struct StructuralViolation {
  RuleId rule = RuleId::kP3;
  std::string detail;
  std::optional<Span> span;
  std::string entity;  // offending number, URL, or section title; may be empty

  friend bool operator==(const StructuralViolation&, const StructuralViolation&) = default;
};

struct StructuralAuditReport {
  std::vector<StructuralViolation> violations;
  /// Observations that do not fail a rule, e.g. first citations appearing
  /// out of numeric order.
  std::vector<std::string> advisories;

  bool passes(RuleId rule) const;
  bool clean() const { return violations.empty(); }
};

/// P3, P4, P10.
std::vector<StructuralViolation> AuditCitationGraph(const ParsedReport& report);
/// P5, P9.
std::vector<StructuralViolation> AuditLayout(const ParsedReport& report);
/// Both audits plus advisories.
StructuralAuditReport AuditReport(const ParsedReport& report);

/// One line-oriented record per violation for `lint` output.
nlohmann::json ViolationToJson(const StructuralViolation& v, std::string_view file);

}  // namespace deepeval
