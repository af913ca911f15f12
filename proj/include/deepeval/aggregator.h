#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepeval/citation_verifier.h"
#include "deepeval/metric_engines.h"

namespace deepeval {

/// The result of one (system, task, metric) unit.
struct RunRecord {
  std::string system;
  std::string task_id;
  std::string category;  // display name of the task category
  std::string metric_id;
  std::string report_path;
  std::string status = "ok";  // ok | unavailable | absent | failed
  std::optional<double> score;                    // presentation, consistency, coverage, association
  std::optional<PairOutcome> depth;               // depth, this system as A against the baseline as B
  std::string baseline;                           // depth only
  std::optional<CitationAuditSummary> citation;   // accuracy
  std::vector<std::string> transcripts;
  std::vector<std::string> warnings;
  nlohmann::json detail;  // per-judge breakdown, null when not run
};

nlohmann::json RunRecordToJson(const RunRecord& r);
RunRecord RunRecordFromJson(const nlohmann::json& j);

/// The four dimensions shown on the leaderboard, in column order.
const std::vector<std::string>& LeaderboardMetrics();

struct CellSource {
  std::string task_id;
  double score = 0;
  std::vector<std::string> transcripts;
  friend bool operator==(const CellSource&, const CellSource&) = default;
};

struct DimensionCell {
  std::optional<double> mean;
  std::vector<CellSource> sources;
  friend bool operator==(const DimensionCell&, const DimensionCell&) = default;
};

struct LeaderboardRow {
  std::string system;
  std::map<std::string, DimensionCell> dims;
  std::optional<double> avg;  // mean of the present dimensions
  friend bool operator==(const LeaderboardRow&, const LeaderboardRow&) = default;
};

struct WinRateRow {
  std::string system;
  std::string baseline;
  int wins = 0;
  int losses = 0;
  int ties = 0;
  std::optional<double> win_rate;
  friend bool operator==(const WinRateRow&, const WinRateRow&) = default;
};

struct CitationRow {
  std::string category;
  std::string system;
  int tasks = 0;
  double e1 = 0;
  double e2 = 0;
  double e3 = 0;
  double total = 0;
  friend bool operator==(const CitationRow&, const CitationRow&) = default;
};

struct Aggregate {
  std::vector<LeaderboardRow> leaderboard;
  std::vector<WinRateRow> win_rates;
  std::vector<CitationRow> citation_errors;
  std::vector<std::string> footnotes;
  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

/// Permutation-invariant over `records`. Throws std::invalid_argument on a
/// duplicate (system, task, metric).
Aggregate AggregateRecords(std::vector<RunRecord> records);

/// One decimal, half rounded up.
std::string FormatOneDecimal(double value);
/// FormatOneDecimal, or "—" when undefined.
std::string FormatCell(const std::optional<double>& value);

nlohmann::json AggregateToJson(const Aggregate& a);
Aggregate AggregateFromJson(const nlohmann::json& j);
std::string RenderMarkdown(const Aggregate& a);
std::string RenderLeaderboardCsv(const Aggregate& a);
std::string RenderWinRateCsv(const Aggregate& a);
std::string RenderCitationCsv(const Aggregate& a);

}  // namespace deepeval
