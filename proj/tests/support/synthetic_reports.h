#pragma once

// Synthetic markdown reports with a manifest of planted structural defects.
// The manifest is produced by construction, independently of the auditor.

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "deepeval/structural_auditor.h"

namespace deepeval::testing {

struct PlantedDefect {
  RuleId rule;
  std::string entity;

  friend bool operator<(const PlantedDefect& a, const PlantedDefect& b) {
    return std::tie(a.rule, a.entity) < std::tie(b.rule, b.entity);
  }
  friend bool operator==(const PlantedDefect&, const PlantedDefect&) = default;
};

struct SyntheticReport {
  std::string text;
  std::vector<PlantedDefect> manifest;  // sorted
};

enum class DefectKind {
  kSkippedNumber,
  kDuplicateNumber,
  kSourceWithTwoNumbers,
  kOrphanReference,
  kUnresolvedCitation,
  kDuplicateReferenceSection,
  kBrokenTable,
  kBoldHeading,
};

inline constexpr DefectKind kAllDefectKinds[] = {
    DefectKind::kSkippedNumber,      DefectKind::kDuplicateNumber,           DefectKind::kSourceWithTwoNumbers,
    DefectKind::kOrphanReference,    DefectKind::kUnresolvedCitation,        DefectKind::kDuplicateReferenceSection,
    DefectKind::kBrokenTable,        DefectKind::kBoldHeading,
};

struct RefSpec {
  int number;
  std::string title;
  std::string url;
};

inline std::vector<PlantedDefect> Sorted(std::vector<PlantedDefect> v) {
  std::sort(v.begin(), v.end());
  return v;
}

inline std::vector<PlantedDefect> ToDefects(const std::vector<StructuralViolation>& violations) {
  std::vector<PlantedDefect> out;
  for (const auto& v : violations) out.push_back({v.rule, v.entity});
  return Sorted(std::move(out));
}

/// Builds a report with `defects` planted (each kind at most once per call).
inline SyntheticReport BuildSyntheticReport(std::mt19937& rng, const std::vector<DefectKind>& defects) {
  auto has = [&](DefectKind k) { return std::find(defects.begin(), defects.end(), k) != defects.end(); };
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  SyntheticReport out;
  const int base = uniform(5, 9);
  std::vector<RefSpec> refs;
  for (int n = 1; n <= base; ++n) {
    refs.push_back({n, fmt::format("Source document {}", n), fmt::format("https://src{}.example.org/doc/{}", n, n)});
  }

  // Numbers every claim may cite.
  std::vector<int> citable;
  for (int n = 1; n <= base; ++n) citable.push_back(n);

  if (has(DefectKind::kSkippedNumber)) {
    const int skip = uniform(2, base - 1);
    refs.erase(std::remove_if(refs.begin(), refs.end(), [&](const RefSpec& r) { return r.number == skip; }),
               refs.end());
    citable.erase(std::remove(citable.begin(), citable.end(), skip), citable.end());
    out.manifest.push_back({RuleId::kP10, fmt::format("[{}]", skip)});
  }
  int next_number = base + 1;
  std::vector<RefSpec> extra;
  if (has(DefectKind::kDuplicateNumber)) {
    const int dup = citable[static_cast<std::size_t>(uniform(0, static_cast<int>(citable.size()) - 1))];
    extra.push_back({dup, "Conflicting source", fmt::format("https://conflict.example.net/{}", dup)});
    out.manifest.push_back({RuleId::kP10, fmt::format("[{}]", dup)});
  }
  if (has(DefectKind::kSourceWithTwoNumbers)) {
    const int orig = citable[static_cast<std::size_t>(uniform(0, static_cast<int>(citable.size()) - 1))];
    const auto it = std::find_if(refs.begin(), refs.end(), [&](const RefSpec& r) { return r.number == orig; });
    extra.push_back({next_number, it->title + " (again)", it->url});
    citable.push_back(next_number);
    out.manifest.push_back({RuleId::kP10, it->url});
    ++next_number;
  }
  if (has(DefectKind::kOrphanReference)) {
    extra.push_back({next_number, "Never cited", fmt::format("https://orphan.example.com/{}", next_number)});
    out.manifest.push_back({RuleId::kP3, fmt::format("[{}]", next_number)});
    ++next_number;
  }
  int unresolved = 0;
  if (has(DefectKind::kUnresolvedCitation)) {
    unresolved = next_number + 40;
    out.manifest.push_back({RuleId::kP4, fmt::format("[{}]", unresolved)});
  }

  // Body: every citable number is used at least once.
  std::vector<int> to_cite = citable;
  std::shuffle(to_cite.begin(), to_cite.end(), rng);
  const int sections = uniform(2, 4);
  const int bold_section = has(DefectKind::kBoldHeading) ? uniform(1, sections) : 0;
  const int table_section = uniform(1, sections);
  std::string body = "# Synthetic Research Report\n\nThis report examines a synthetic topic in depth.\n\n";
  std::size_t cursor = 0;
  for (int s = 1; s <= sections; ++s) {
    const std::string title = fmt::format("Section {} Findings", s);
    if (s == bold_section) {
      body += fmt::format("**{}**\n\n", title);
      out.manifest.push_back({RuleId::kP9, fmt::format("**{}**", title)});
    } else {
      body += fmt::format("## {}\n\n", title);
    }
    const int paragraphs = uniform(1, 3);
    for (int p = 0; p < paragraphs; ++p) {
      const int sentences = uniform(1, 4);
      for (int k = 0; k < sentences; ++k) {
        std::string cite;
        if (cursor < to_cite.size()) {
          cite = fmt::format(" [{}]", to_cite[cursor++]);
        } else if (uniform(0, 2) == 0) {
          cite = fmt::format(" [{}]", citable[static_cast<std::size_t>(uniform(0, static_cast<int>(citable.size()) - 1))]);
        }
        body += fmt::format("Finding {} of paragraph {} reports growth of {}.{}%{}. ", k + 1, p + 1, uniform(1, 90),
                            uniform(0, 9), cite);
      }
      body += "\n\n";
    }
    if (s == table_section) {
      body += "| Metric | 2024 | 2025 |\n|---|---:|---:|\n| Revenue | 10 | 12 |\n| Units | 3 | 4 |\n\n";
    }
  }
  // Leftover numbers go in a closing paragraph.
  while (cursor < to_cite.size()) body += fmt::format("Additional context is available [{}].\n\n", to_cite[cursor++]);
  if (unresolved) body += fmt::format("One more unsupported remark [{}].\n\n", unresolved);
  if (has(DefectKind::kBrokenTable)) {
    body += "| Region | Share | Trend |\n|---|---|---|\n| North | 40% | up | extra |\n| South | 60% | down |\n\n";
    out.manifest.push_back({RuleId::kP9, ""});
  }

  // Reference list, extras placed right after their numeric neighbour.
  std::vector<RefSpec> all = refs;
  for (const auto& e : extra) all.push_back(e);
  std::stable_sort(all.begin(), all.end(), [](const RefSpec& a, const RefSpec& b) { return a.number < b.number; });
  body += "## References\n\n";
  for (const auto& r : all) body += fmt::format("[{}] {}: {}\n", r.number, r.title, r.url);
  if (has(DefectKind::kDuplicateReferenceSection)) {
    body += "\n## Bibliography\n\nSee the list above for full entries.\n";
    out.manifest.push_back({RuleId::kP5, "References|Bibliography"});
  }
  out.text = std::move(body);
  out.manifest = Sorted(std::move(out.manifest));
  return out;
}

/// Random subset of defect kinds.
inline std::vector<DefectKind> RandomDefects(std::mt19937& rng) {
  std::vector<DefectKind> out;
  for (auto k : kAllDefectKinds) {
    if (std::bernoulli_distribution(0.45)(rng)) out.push_back(k);
  }
  return out;
}

}  // namespace deepeval::testing
