#pragma once

#include <chrono>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace deepeval {

enum class Domain {
  kScienceTechnology,
  kEconomyBusiness,
  kHealthWellbeing,
  kLawGovernance,
  kSocietyCulture,
  kEducationKnowledge,
  kMediaEntertainment,
  kUnknown,
};

enum class Category {
  kMarketAnalysis,
  kTechnicalSupport,
  kDecisionSupport,
  kPolicyRegulation,
  kLiteratureReview,
  kCompetitiveAnalysis,
  kProsCons,
  kWideInfoSearch,
  kTopicExploration,
  kTopRankings,
  kUnknown,
};

/// Classifies a free-form label; unrecognized labels map to kUnknown.
Domain ParseDomain(std::string_view label);
Category ParseCategory(std::string_view label);
std::string_view DomainName(Domain d);
std::string_view CategoryName(Category c);

struct ChecklistItem {
  int item_id = 0;
  std::string text;

  friend bool operator==(const ChecklistItem&, const ChecklistItem&) = default;
};

struct BenchmarkTask {
  std::string id;
  std::string query_template;
  // Original labels are kept so unknown values survive a round trip.
  std::string domain_label;
  std::string category_label;
  Domain domain = Domain::kUnknown;
  Category category = Category::kUnknown;
  std::vector<ChecklistItem> coverage_checklist;

  friend bool operator==(const BenchmarkTask&, const BenchmarkTask&) = default;
};

struct TaskDiagnostic {
  enum class Severity { kWarning, kError };
  Severity severity = Severity::kError;
  std::size_t line = 0;  // 1-based line in the task file, 0 if not applicable
  std::string task_id;
  std::string message;
};

struct TaskLoadResult {
  std::vector<BenchmarkTask> tasks;
  std::vector<TaskDiagnostic> diagnostics;

  bool ok() const;
  std::vector<TaskDiagnostic> errors() const;
};

class TaskFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a line-delimited JSON task file. Each nonblank line is one task
/// record. Schema problems are reported per task in the diagnostics and the
/// offending task is dropped; only an unreadable file throws.
TaskLoadResult LoadTasks(const std::filesystem::path& path);
TaskLoadResult ParseTasks(std::string_view text);

nlohmann::json TaskToJson(const BenchmarkTask& task);
/// One JSON record per line, in order.
std::string SerializeTasks(const std::vector<BenchmarkTask>& tasks);

// ---------------------------------------------------------------------------
// Evaluation-date templating

inline constexpr std::string_view kDatePlaceholder = "{{date}}";

/// Parses YYYY-MM-DD. Throws std::invalid_argument on malformed or
/// out-of-range input.
std::chrono::year_month_day ParseIsoDate(std::string_view text);
std::string FormatIsoDate(std::chrono::year_month_day date);

/// Renders a date. `format` is "long" ("September 15, 2025"), "iso"
/// ("2025-09-15"), or a pattern using %Y %m %d %e %B %b %%.
std::string FormatDate(std::chrono::year_month_day date, std::string_view format);

struct ResolvedTask {
  BenchmarkTask task;
  std::chrono::year_month_day eval_date;
  std::string query;
};

/// Replaces every `{{date}}` in `text` with `rendered`; other bytes untouched.
std::string SubstituteDate(std::string_view text, std::string_view rendered);

ResolvedTask ResolveDate(const BenchmarkTask& task, std::chrono::year_month_day eval_date,
                         std::string_view format = "long");

}  // namespace deepeval
