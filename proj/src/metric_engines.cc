#include "deepeval/metric_engines.h"

#include <cmath>
#include <future>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace deepeval {
namespace {

using json = nlohmann::json;

constexpr const char* kDepthDims[] = {"granularity", "insight", "critique", "evidence", "density"};

std::optional<int> BinaryScore(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  if (v.is_number()) {
    const double d = v.get<double>();
    if (d == 0 || d == 1) return static_cast<int>(d);
  }
  if (v.is_string() && (v == "0" || v == "1")) return v == "1" ? 1 : 0;
  return std::nullopt;
}

std::optional<int> ItemId(const json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    try {
      std::size_t used = 0;
      const int id = std::stoi(v.get<std::string>(), &used);
      if (used == v.get<std::string>().size()) return id;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

std::optional<std::string> CheckCard(const json& card) {
  if (!card.is_object()) return "score card is not an object";
  for (const char* dim : kDepthDims) {
    if (!card.contains(dim) || !card[dim].is_number()) return fmt::format("missing numeric {}", dim);
    const double v = card[dim].get<double>();
    if (!(v >= 0 && v <= 5)) return fmt::format("{} out of range [0, 5]", dim);
  }
  return std::nullopt;
}

DepthScoreCard ToCard(const json& card) {
  DepthScoreCard c;
  c.granularity = card["granularity"].get<double>();
  c.insight = card["insight"].get<double>();
  c.critique = card["critique"].get<double>();
  c.evidence = card["evidence"].get<double>();
  c.density = card["density"].get<double>();
  c.total = c.granularity + c.insight + c.critique + c.evidence + c.density;
  return c;
}

json CardToJson(const DepthScoreCard& c) {
  return {{"granularity", c.granularity}, {"insight", c.insight},   {"critique", c.critique},
          {"evidence", c.evidence},       {"density", c.density},   {"total", c.total}};
}

// Runs fn(judge_id) for each judge concurrently, preserving roster order.
template <typename Fn>
auto ForEachJudge(const std::vector<std::string>& ids, Fn fn) {
  using R = decltype(fn(ids.front()));
  std::vector<std::future<R>> futures;
  for (const auto& id : ids) futures.push_back(std::async(std::launch::async, fn, id));
  std::vector<R> out;
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

}  // namespace

const std::vector<std::string>& AllMetricIds() {
  static const std::vector<std::string> kIds{
      std::string(kMetricPresentation), std::string(kMetricConsistency), std::string(kMetricCoverage),
      std::string(kMetricDepth),        std::string(kMetricAssociation), std::string(kMetricAccuracy)};
  return kIds;
}

bool IsMetricId(std::string_view id) {
  const auto& ids = AllMetricIds();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

std::string_view PairVerdictName(PairVerdict v) {
  switch (v) {
    case PairVerdict::kA: return "A";
    case PairVerdict::kB: return "B";
    case PairVerdict::kTie: return "tie";
  }
  return "?";
}

ResponseSchema ChecklistSchema(const std::vector<ChecklistItem>& items) {
  std::set<int> expected;
  for (const auto& item : items) expected.insert(item.item_id);
  return {"checklist", [expected](const json& j) -> std::optional<std::string> {
            if (!j.contains("evaluations") || !j["evaluations"].is_array()) return "missing evaluations array";
            std::set<int> seen;
            for (const auto& e : j["evaluations"]) {
              if (!e.is_object()) return "evaluation is not an object";
              auto id = ItemId(e.value("item_id", json()));
              if (!id) return "evaluation without integer item_id";
              if (!expected.count(*id)) return fmt::format("unknown item_id {}", *id);
              if (!seen.insert(*id).second) return fmt::format("duplicate item_id {}", *id);
              if (!BinaryScore(e.value("score", json()))) return fmt::format("item {} score is not 0 or 1", *id);
            }
            if (seen != expected) return fmt::format("{} of {} items evaluated", seen.size(), expected.size());
            return std::nullopt;
          }};
}

ResponseSchema IssueReportSchema() {
  return {"issue_report", [](const json& j) -> std::optional<std::string> {
            if (!j.contains("specific_issues") || !j["specific_issues"].is_array()) {
              return "missing specific_issues array";
            }
            if (j.contains("total_issues") && !j["total_issues"].is_number() && !j["total_issues"].is_null()) {
              return "total_issues is not a number";
            }
            return std::nullopt;
          }};
}

ResponseSchema DepthSchema() {
  return {"depth_scores", [](const json& j) -> std::optional<std::string> {
            if (!j.contains("scores") || !j["scores"].is_object()) return "missing scores object";
            for (const char* side : {"A", "B"}) {
              if (!j["scores"].contains(side)) return fmt::format("missing scores.{}", side);
              if (auto problem = CheckCard(j["scores"][side])) return fmt::format("scores.{}: {}", side, *problem);
            }
            return std::nullopt;
          }};
}

std::vector<ChecklistVerdict> ParseChecklistVerdicts(const json& j) {
  std::vector<ChecklistVerdict> out;
  for (const auto& e : j.at("evaluations")) {
    const auto& just = e.value("justification", json(""));
    out.push_back({*ItemId(e["item_id"]), *BinaryScore(e["score"]) == 1, just.is_string() ? just.get<std::string>() : just.dump()});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
  return out;
}

IssueReport ParseIssueReport(const json& j) {
  IssueReport r;
  for (const auto& issue : j.at("specific_issues")) {
    r.specific_issues.push_back(issue.is_string() ? issue.get<std::string>() : issue.dump());
  }
  const int listed = static_cast<int>(r.specific_issues.size());
  r.total_issues = listed;
  if (j.contains("total_issues") && j["total_issues"].is_number()) {
    const double claimed = j["total_issues"].get<double>();
    r.repaired = claimed != listed;
  }
  if (j.contains("score") && j["score"].is_number()) r.judge_reported_score = j["score"].get<double>();
  if (j.contains("reasoning") && j["reasoning"].is_string()) r.reasoning = j["reasoning"].get<std::string>();
  return r;
}

std::pair<DepthScoreCard, DepthScoreCard> ParseDepthScores(const json& j) {
  return {ToCard(j.at("scores").at("A")), ToCard(j.at("scores").at("B"))};
}

double MapIssueCountToScore(int issue_count, const RubricBandTable& table) { return table.Score(issue_count); }

PairVerdict DecideVerdict(double total_a, double total_b) {
  const double diff = total_a - total_b;
  if (std::fabs(diff) <= 1.0 + 1e-9) return PairVerdict::kTie;
  return diff > 0 ? PairVerdict::kA : PairVerdict::kB;
}

std::optional<double> WinRate(const std::vector<PairVerdict>& outcomes, PairVerdict side) {
  const PairVerdict other = side == PairVerdict::kA ? PairVerdict::kB : PairVerdict::kA;
  const auto wins = std::count(outcomes.begin(), outcomes.end(), side);
  const auto losses = std::count(outcomes.begin(), outcomes.end(), other);
  if (wins + losses == 0) return std::nullopt;
  return static_cast<double>(wins) / static_cast<double>(wins + losses);
}

json MetricScoreToJson(const MetricScore& m) {
  json judges = json::array();
  for (const auto& j : m.judges) {
    judges.push_back({{"judge_id", j.judge_id},
                      {"score", j.score ? json(*j.score) : json(nullptr)},
                      {"transcript_id", j.transcript_id},
                      {"error", j.error},
                      {"detail", j.detail}});
  }
  return {{"metric_id", m.metric_id},
          {"score", m.score ? json(*m.score) : json(nullptr)},
          {"judges", judges},
          {"warnings", m.warnings}};
}

MetricScore MetricScoreFromJson(const json& j) {
  MetricScore m;
  m.metric_id = j.at("metric_id").get<std::string>();
  if (!j.at("score").is_null()) m.score = j["score"].get<double>();
  for (const auto& js : j.at("judges")) {
    JudgeScore s{js.at("judge_id").get<std::string>(), std::nullopt, js.value("transcript_id", ""),
                 js.value("error", ""), js.value("detail", json())};
    if (!js.at("score").is_null()) s.score = js["score"].get<double>();
    m.judges.push_back(std::move(s));
  }
  m.warnings = j.value("warnings", std::vector<std::string>{});
  return m;
}

json PairOutcomeToJson(const PairOutcome& p) {
  json calls = json::array();
  for (const auto& c : p.calls) {
    calls.push_back({{"judge_id", c.judge_id},
                     {"swapped", c.swapped},
                     {"card_a", c.card_a ? CardToJson(*c.card_a) : json(nullptr)},
                     {"card_b", c.card_b ? CardToJson(*c.card_b) : json(nullptr)},
                     {"transcript_id", c.transcript_id},
                     {"error", c.error}});
  }
  return {{"verdict", PairVerdictName(p.verdict)},
          {"total_a", p.total_a},
          {"total_b", p.total_b},
          {"calls", calls},
          {"warnings", p.warnings}};
}

PairOutcome PairOutcomeFromJson(const json& j) {
  PairOutcome p;
  const auto v = j.at("verdict").get<std::string>();
  p.verdict = v == "A" ? PairVerdict::kA : v == "B" ? PairVerdict::kB : PairVerdict::kTie;
  p.total_a = j.at("total_a").get<double>();
  p.total_b = j.at("total_b").get<double>();
  for (const auto& c : j.at("calls")) {
    DepthCall call{c.at("judge_id").get<std::string>(), c.value("swapped", false), std::nullopt, std::nullopt,
                   c.value("transcript_id", ""), c.value("error", "")};
    if (!c.at("card_a").is_null()) call.card_a = ToCard(c["card_a"]);
    if (!c.at("card_b").is_null()) call.card_b = ToCard(c["card_b"]);
    p.calls.push_back(std::move(call));
  }
  p.warnings = j.value("warnings", std::vector<std::string>{});
  return p;
}

MetricEngines::MetricEngines(JudgeGateway& gateway, MetricEngineOptions options)
    : gateway_(gateway), options_(std::move(options)) {}

MetricScore MetricEngines::Finish(std::string metric_id, std::vector<JudgeScore> judges) {
  MetricScore out;
  out.metric_id = std::move(metric_id);
  std::vector<double> scores;
  for (const auto& j : judges) {
    if (j.score) {
      scores.push_back(*j.score);
    } else {
      out.warnings.push_back(fmt::format("judge {} failed: {}", j.judge_id, j.error));
    }
  }
  if (!scores.empty()) {
    out.score = EnsembleMean(scores);
    if (scores.size() < judges.size()) {
      out.warnings.push_back(fmt::format("{} scored by {} of {} judges", out.metric_id, scores.size(), judges.size()));
    }
  } else {
    out.warnings.push_back(fmt::format("{} unavailable: every judge failed", out.metric_id));
  }
  for (const auto& w : out.warnings) spdlog::warn("{}", w);
  out.judges = std::move(judges);
  return out;
}

MetricScore MetricEngines::ScoreChecklistMetric(std::string_view metric_id, const ResolvedTask& task,
                                                const std::string& report) {
  PromptTemplate tmpl;
  const std::vector<ChecklistItem>* items;
  if (metric_id == kMetricPresentation) {
    tmpl = PresentationTemplate();
    items = &PresentationChecklist();
  } else if (metric_id == kMetricCoverage) {
    tmpl = CoverageTemplate();
    items = &task.task.coverage_checklist;
  } else {
    throw std::invalid_argument(fmt::format("{} is not a checklist metric", metric_id));
  }
  if (items->empty()) throw std::invalid_argument("checklist is empty");

  const auto prompt = RenderPrompt(
      tmpl, {{"query", task.query}, {"checklist_section", RenderChecklistSection(*items)}, {"report_content", report}});
  const auto schema = ChecklistSchema(*items);
  auto judges = ForEachJudge(gateway_.judge_ids(), [&](const std::string& id) {
    JudgeScore js{id, std::nullopt, "", "", json()};
    auto r = gateway_.Query(id, prompt, schema);
    js.transcript_id = r.transcript_id;
    if (!r.ok()) {
      js.error = r.error;
      return js;
    }
    const auto verdicts = ParseChecklistVerdicts(*r.parsed);
    int passes = 0;
    js.detail = json::array();
    for (const auto& v : verdicts) {
      passes += v.pass ? 1 : 0;
      js.detail.push_back({{"item_id", v.item_id}, {"pass", v.pass ? 1 : 0}, {"justification", v.justification}});
    }
    js.score = 100.0 * passes / static_cast<double>(verdicts.size());
    return js;
  });
  return Finish(std::string(metric_id), std::move(judges));
}

MetricScore MetricEngines::ScorePointwiseMetric(std::string_view metric_id, const ResolvedTask& task,
                                                const std::string& report) {
  const RubricBandTable* table;
  PromptTemplate tmpl;
  if (metric_id == kMetricConsistency) {
    table = &options_.consistency_rubric;
    tmpl = ConsistencyTemplate(*table);
  } else if (metric_id == kMetricAssociation) {
    table = &options_.association_rubric;
    tmpl = AssociationTemplate(*table);
  } else {
    throw std::invalid_argument(fmt::format("{} is not a pointwise metric", metric_id));
  }
  const auto prompt = RenderPrompt(tmpl, {{"task", task.query}, {"report", report}});
  const auto schema = IssueReportSchema();
  std::vector<std::string> repairs;
  std::mutex repairs_mu;
  auto judges = ForEachJudge(gateway_.judge_ids(), [&](const std::string& id) {
    JudgeScore js{id, std::nullopt, "", "", json()};
    auto r = gateway_.Query(id, prompt, schema);
    js.transcript_id = r.transcript_id;
    if (!r.ok()) {
      js.error = r.error;
      return js;
    }
    const auto issues = ParseIssueReport(*r.parsed);
    if (issues.repaired) {
      std::lock_guard lock(repairs_mu);
      repairs.push_back(fmt::format("judge {} total_issues disagreed with its list; using {}", id,
                                    issues.total_issues));
    }
    js.score = MapIssueCountToScore(issues.total_issues, *table);
    js.detail = {{"total_issues", issues.total_issues},
                 {"specific_issues", issues.specific_issues},
                 {"judge_reported_score",
                  issues.judge_reported_score ? json(*issues.judge_reported_score) : json(nullptr)},
                 {"reasoning", issues.reasoning}};
    return js;
  });
  auto out = Finish(std::string(metric_id), std::move(judges));
  std::sort(repairs.begin(), repairs.end());
  for (auto& w : repairs) {
    spdlog::warn("{}", w);
    out.warnings.push_back(std::move(w));
  }
  return out;
}

std::optional<PairOutcome> MetricEngines::ScoreDepthPair(const ResolvedTask& task, const std::string& report_a,
                                                         const std::string& report_b) {
  const auto tmpl = DepthTemplate();
  const auto schema = DepthSchema();
  struct Job {
    std::string judge_id;
    bool swapped;
  };
  std::vector<Job> jobs;
  for (const auto& id : gateway_.judge_ids()) {
    jobs.push_back({id, false});
    jobs.push_back({id, true});
  }
  std::vector<std::future<DepthCall>> futures;
  for (const auto& job : jobs) {
    futures.push_back(std::async(std::launch::async, [&, job] {
      DepthCall call{job.judge_id, job.swapped, std::nullopt, std::nullopt, "", ""};
      const auto& first = job.swapped ? report_b : report_a;
      const auto& second = job.swapped ? report_a : report_b;
      auto r = gateway_.Query(
          job.judge_id,
          RenderPrompt(tmpl, {{"query", task.query}, {"report_a_content", first}, {"report_b_content", second}}),
          schema);
      call.transcript_id = r.transcript_id;
      if (!r.ok()) {
        call.error = r.error;
        return call;
      }
      auto [presented_a, presented_b] = ParseDepthScores(*r.parsed);
      call.card_a = job.swapped ? presented_b : presented_a;
      call.card_b = job.swapped ? presented_a : presented_b;
      return call;
    }));
  }

  PairOutcome out;
  std::vector<double> totals_a;
  std::vector<double> totals_b;
  for (auto& f : futures) {
    auto call = f.get();
    if (call.card_a) {
      totals_a.push_back(call.card_a->total);
      totals_b.push_back(call.card_b->total);
    } else {
      out.warnings.push_back(fmt::format("depth call by {} ({} order) failed: {}", call.judge_id,
                                         call.swapped ? "swapped" : "original", call.error));
    }
    out.calls.push_back(std::move(call));
  }
  for (const auto& w : out.warnings) spdlog::warn("{}", w);
  if (totals_a.empty()) return std::nullopt;
  out.total_a = EnsembleMean(totals_a);
  out.total_b = EnsembleMean(totals_b);
  out.verdict = DecideVerdict(out.total_a, out.total_b);
  return out;
}

}  // namespace deepeval
