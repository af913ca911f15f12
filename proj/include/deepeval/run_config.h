#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepeval/fetcher.h"
#include "deepeval/judge_gateway.h"
#include "deepeval/metric_engines.h"

namespace deepeval {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SystemEntry {
  std::string name;
  std::filesystem::path reports_dir;  // holds <task_id>.md
};

/// A run, as declared in one JSON document. Relative paths in the document
/// are resolved against the directory holding it.
///
///   {
///     "run_id": "demo",
///     "tasks": "tasks.jsonl",
///     "reports_dir": "reports",
///     "systems": ["alpha", "beta"],          // or {"alpha": "elsewhere/alpha"}
///     "judges": [{"judge_id": "j1", "endpoint": "https://...", "model_name": "m"}],
///     "metrics": ["presentation", "consistency", "coverage", "depth", "association", "accuracy"],
///     "eval_date": "2025-09-15",
///     "date_format": "long",
///     "depth_baseline": "alpha",
///     "fetch": {"timeout_s": 30, "max_redirects": 10, "prefix_words": 500,
///               "global_cap": 8, "per_host_cap": 2, "paywall_unverifiable": false},
///     "concurrency": {"units": 4},
///     "cache_dir": "cache",
///     "output_dir": "results",
///     "band_tables": {"consistency": [...], "association": [...]}
///   }
struct RunConfig {
  std::string run_id;
  std::filesystem::path tasks_path;
  std::vector<SystemEntry> systems;  // sorted by name
  std::vector<JudgeConfig> judges;
  std::vector<std::string> metrics;  // in canonical metric order
  std::chrono::year_month_day eval_date{};
  std::string date_format = "long";
  std::optional<std::string> depth_baseline;
  std::optional<FetchPolicy> fetch;
  bool paywall_unverifiable = false;
  int unit_concurrency = 4;
  std::filesystem::path cache_dir;
  std::filesystem::path output_dir;
  MetricEngineOptions rubrics;
  /// The document the config was built from, with command-line overrides
  /// applied. Its hash identifies the run.
  nlohmann::json document;

  bool selected(std::string_view metric) const;
  std::filesystem::path run_dir() const { return output_dir / run_id; }
  std::string hash() const;
  const SystemEntry* system(std::string_view name) const;
};

/// Throws ConfigError on any schema or invariant violation.
RunConfig RunConfigFromJson(const nlohmann::json& document, const std::filesystem::path& base_dir);
nlohmann::json LoadConfigDocument(const std::filesystem::path& path);

}  // namespace deepeval
