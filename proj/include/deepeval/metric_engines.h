#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepeval/judge_gateway.h"
#include "deepeval/rubric.h"
#include "deepeval/task_model.h"

namespace deepeval {

inline constexpr std::string_view kMetricPresentation = "presentation";
inline constexpr std::string_view kMetricConsistency = "consistency";
inline constexpr std::string_view kMetricCoverage = "coverage";
inline constexpr std::string_view kMetricDepth = "depth";
inline constexpr std::string_view kMetricAssociation = "association";
inline constexpr std::string_view kMetricAccuracy = "accuracy";

/// All metric ids in display order.
const std::vector<std::string>& AllMetricIds();
bool IsMetricId(std::string_view id);

struct ChecklistVerdict {
  int item_id = 0;
  bool pass = false;
  std::string justification;
};

struct IssueReport {
  std::vector<std::string> specific_issues;
  int total_issues = 0;
  std::optional<double> judge_reported_score;
  std::string reasoning;
  bool repaired = false;  // total_issues disagreed with the list and was reset
};

struct DepthScoreCard {
  double granularity = 0;
  double insight = 0;
  double critique = 0;
  double evidence = 0;
  double density = 0;
  double total = 0;  // always the sum of the five dimensions
};

enum class PairVerdict { kA, kB, kTie };
std::string_view PairVerdictName(PairVerdict v);

/// One judge scoring one ordering. Cards are reported for the caller's
/// report_a and report_b regardless of presentation order.
struct DepthCall {
  std::string judge_id;
  bool swapped = false;
  std::optional<DepthScoreCard> card_a;
  std::optional<DepthScoreCard> card_b;
  std::string transcript_id;
  std::string error;
};

struct PairOutcome {
  PairVerdict verdict = PairVerdict::kTie;
  double total_a = 0;
  double total_b = 0;
  std::vector<DepthCall> calls;
  std::vector<std::string> warnings;
};

/// Per-judge contribution to a metric.
struct JudgeScore {
  std::string judge_id;
  std::optional<double> score;
  std::string transcript_id;
  std::string error;
  nlohmann::json detail;  // verdicts or issue report as parsed
};

struct MetricScore {
  std::string metric_id;
  std::optional<double> score;  // nullopt: unavailable
  std::vector<JudgeScore> judges;
  std::vector<std::string> warnings;
};

ResponseSchema ChecklistSchema(const std::vector<ChecklistItem>& items);
ResponseSchema IssueReportSchema();
ResponseSchema DepthSchema();

/// Both parsers assume the object passed the matching schema.
std::vector<ChecklistVerdict> ParseChecklistVerdicts(const nlohmann::json& j);
IssueReport ParseIssueReport(const nlohmann::json& j);
/// Cards for the presented A and B. Totals are recomputed from dimensions.
std::pair<DepthScoreCard, DepthScoreCard> ParseDepthScores(const nlohmann::json& j);

double MapIssueCountToScore(int issue_count, const RubricBandTable& table);

/// Tie iff the totals differ by at most one point.
PairVerdict DecideVerdict(double total_a, double total_b);

/// wins / (wins + losses) from the point of view of `side`; ties are
/// excluded. nullopt when nothing is decisive.
std::optional<double> WinRate(const std::vector<PairVerdict>& outcomes, PairVerdict side = PairVerdict::kA);

nlohmann::json MetricScoreToJson(const MetricScore& m);
MetricScore MetricScoreFromJson(const nlohmann::json& j);
nlohmann::json PairOutcomeToJson(const PairOutcome& p);
PairOutcome PairOutcomeFromJson(const nlohmann::json& j);

struct MetricEngineOptions {
  RubricBandTable consistency_rubric = RubricBandTable::DefaultConsistency();
  RubricBandTable association_rubric = RubricBandTable::DefaultAssociation();
};

/// Runs the judging protocols against every judge in the gateway roster.
class MetricEngines {
 public:
  MetricEngines(JudgeGateway& gateway, MetricEngineOptions options = {});

  /// presentation (fixed checklist) or coverage (task checklist).
  MetricScore ScoreChecklistMetric(std::string_view metric_id, const ResolvedTask& task, const std::string& report);
  /// consistency or association.
  MetricScore ScorePointwiseMetric(std::string_view metric_id, const ResolvedTask& task, const std::string& report);
  /// Position-swapped pairwise depth comparison; nullopt when every call failed.
  std::optional<PairOutcome> ScoreDepthPair(const ResolvedTask& task, const std::string& report_a,
                                            const std::string& report_b);

  const MetricEngineOptions& options() const { return options_; }

 private:
  MetricScore Finish(std::string metric_id, std::vector<JudgeScore> judges);

  JudgeGateway& gateway_;
  MetricEngineOptions options_;
};

}  // namespace deepeval
