#include "deepeval/structural_auditor.h"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

namespace deepeval {
namespace {

std::string SourceIdentity(const ReferenceEntry& e) { return e.url ? *e.url : e.label; }

}  // namespace

std::string_view RuleName(RuleId rule) {
  switch (rule) {
    case RuleId::kP3: return "P3";
    case RuleId::kP4: return "P4";
    case RuleId::kP5: return "P5";
    case RuleId::kP9: return "P9";
    case RuleId::kP10: return "P10";
  }
  return "?";
}

bool StructuralAuditReport::passes(RuleId rule) const {
  return std::none_of(violations.begin(), violations.end(),
                      [rule](const StructuralViolation& v) { return v.rule == rule; });
}

std::vector<StructuralViolation> AuditCitationGraph(const ParsedReport& report) {
  std::vector<StructuralViolation> out;
  const auto refs = report.all_references();

  std::set<int> cited_numbers;
  std::set<std::string> cited_urls;
  std::map<int, Span> first_use;
  for (const auto& c : report.inline_citations) {
    if (const int* n = std::get_if<int>(&c.key)) {
      cited_numbers.insert(*n);
      first_use.emplace(*n, c.span);
    } else {
      cited_urls.insert(std::get<std::string>(c.key));
    }
  }

  // P3: uncited reference entries.
  for (const auto* e : refs) {
    const bool cited = (e->number && cited_numbers.count(*e->number)) || (e->url && cited_urls.count(*e->url));
    if (cited) continue;
    const std::string entity = e->number ? fmt::format("[{}]", *e->number) : SourceIdentity(*e);
    out.push_back({RuleId::kP3, fmt::format("reference {} is never cited in the text", entity), e->span, entity});
  }

  // P4: numbered citations without an entry.
  std::set<int> ref_numbers;
  for (const auto* e : refs) {
    if (e->number) ref_numbers.insert(*e->number);
  }
  for (const auto& [n, span] : first_use) {
    if (ref_numbers.count(n)) continue;
    out.push_back({RuleId::kP4, fmt::format("in-text citation [{}] has no reference entry", n), span,
                   fmt::format("[{}]", n)});
  }

  // P10: continuity and one-to-one numbering over the reference list.
  if (!ref_numbers.empty()) {
    int prev = *ref_numbers.begin();
    for (int n : ref_numbers) {
      for (int missing = prev + 1; missing < n; ++missing) {
        out.push_back({RuleId::kP10, fmt::format("skipped number {}", missing), std::nullopt,
                       fmt::format("[{}]", missing)});
      }
      prev = n;
    }
    std::map<int, std::vector<const ReferenceEntry*>> by_number;
    std::map<std::string, std::vector<const ReferenceEntry*>> by_url;
    for (const auto* e : refs) {
      if (!e->number) continue;
      by_number[*e->number].push_back(e);
      if (e->url) by_url[*e->url].push_back(e);
    }
    for (const auto& [n, entries] : by_number) {
      std::set<std::string> sources;
      for (const auto* e : entries) sources.insert(SourceIdentity(*e));
      if (sources.size() > 1) {
        out.push_back({RuleId::kP10, fmt::format("number {} assigned to {} different sources", n, sources.size()),
                       entries[1]->span, fmt::format("[{}]", n)});
      }
    }
    for (const auto& [url, entries] : by_url) {
      std::set<int> numbers;
      for (const auto* e : entries) numbers.insert(*e->number);
      if (numbers.size() > 1) {
        std::vector<std::string> labels;
        for (int n : numbers) labels.push_back(fmt::format("[{}]", n));
        out.push_back({RuleId::kP10,
                       fmt::format("source {} assigned multiple numbers {}", url, fmt::join(labels, ", ")),
                       entries[1]->span, url});
      }
    }
  }
  return out;
}

std::vector<StructuralViolation> AuditLayout(const ParsedReport& report) {
  std::vector<StructuralViolation> out;
  const auto& sections = report.reference_sections;
  if (sections.size() > 1) {
    std::vector<std::string> titles;
    for (const auto& s : sections) titles.push_back(s.title);
    out.push_back({RuleId::kP5,
                   fmt::format("expected exactly one references section, found {}: {}", sections.size(),
                               fmt::join(titles, ", ")),
                   sections[1].title_span, fmt::format("{}", fmt::join(titles, "|"))});
  } else if (sections.empty()) {
    const bool numbered = std::any_of(report.inline_citations.begin(), report.inline_citations.end(),
                                      [](const InlineCitation& c) { return std::holds_alternative<int>(c.key); });
    if (numbered) {
      out.push_back({RuleId::kP5, "numbered citations are used but there is no references section", std::nullopt, ""});
    }
  }

  for (const auto& t : report.tables) {
    if (t.syntactically_valid) continue;
    out.push_back({RuleId::kP9, "markdown table is malformed (missing separator row or unequal column counts)",
                   t.span, ""});
  }
  for (const auto& span : report.bold_pseudo_headings) {
    const std::string title(span.of(report.raw));
    out.push_back({RuleId::kP9, fmt::format("section title {} is bold text instead of a markdown heading", title),
                   span, title});
  }
  return out;
}

StructuralAuditReport AuditReport(const ParsedReport& report) {
  StructuralAuditReport result;
  result.violations = AuditCitationGraph(report);
  auto layout = AuditLayout(report);
  result.violations.insert(result.violations.end(), layout.begin(), layout.end());

  int max_seen = 0;
  std::set<int> seen;
  for (const auto& c : report.inline_citations) {
    const int* n = std::get_if<int>(&c.key);
    if (!n || !seen.insert(*n).second) continue;
    if (*n < max_seen) {
      result.advisories.push_back(
          fmt::format("citation [{}] first appears after [{}]; numbering is out of order", *n, max_seen));
    }
    max_seen = std::max(max_seen, *n);
  }
  return result;
}

nlohmann::json ViolationToJson(const StructuralViolation& v, std::string_view file) {
  nlohmann::json j{{"file", file}, {"rule", RuleName(v.rule)}, {"detail", v.detail}, {"entity", v.entity}};
  if (v.span) {
    j["span"] = {v.span->begin, v.span->end};
  } else {
    j["span"] = nullptr;
  }
  return j;
}

}  // namespace deepeval
