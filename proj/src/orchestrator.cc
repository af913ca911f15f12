#include "deepeval/orchestrator.h"

#include <atomic>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "deepeval/citation_verifier.h"
#include "deepeval/hashing.h"
#include "deepeval/metric_engines.h"
#include "deepeval/report_parser.h"
#include "deepeval/url.h"

namespace deepeval {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::optional<std::string> ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteAtomic(const fs::path& path, std::string_view text) {
  fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    out << text;
  }
  fs::rename(tmp, path);
}

std::string CategoryLabel(const BenchmarkTask& task) {
  return task.category == Category::kUnknown ? task.category_label : std::string(CategoryName(task.category));
}

json UnitKeyRecord(const RunConfig& config, const WorkUnit& unit, const BenchmarkTask& task,
                   const std::string& report, const std::string& baseline_report) {
  json j{{"system", unit.system},
         {"task", TaskToJson(task)},
         {"metric", unit.metric_id},
         {"eval_date", FormatIsoDate(config.eval_date)},
         {"date_format", config.date_format},
         {"report_sha256", Sha256Hex(report)},
         {"judges", config.document.at("judges")}};
  if (unit.metric_id == kMetricDepth) {
    j["baseline"] = unit.baseline;
    j["baseline_sha256"] = Sha256Hex(baseline_report);
  } else if (unit.metric_id == kMetricConsistency) {
    j["rubric"] = config.rubrics.consistency_rubric.ToJson();
  } else if (unit.metric_id == kMetricAssociation) {
    j["rubric"] = config.rubrics.association_rubric.ToJson();
  } else if (unit.metric_id == kMetricAccuracy && config.fetch) {
    j["fetch"] = {{"prefix_words", config.fetch->prefix_words},
                  {"max_redirects", config.fetch->max_redirects},
                  {"paywall_unverifiable", config.paywall_unverifiable}};
  }
  return j;
}

std::vector<std::string> TranscriptIds(const MetricScore& m) {
  std::vector<std::string> out;
  for (const auto& j : m.judges) {
    if (!j.transcript_id.empty()) out.push_back(j.transcript_id);
  }
  return out;
}

}  // namespace

std::size_t RunPlan::count_skippable() const {
  return std::count_if(units.begin(), units.end(), [](const WorkUnit& u) { return u.skippable; });
}

std::size_t RunPlan::count_absent() const {
  return std::count_if(units.begin(), units.end(), [](const WorkUnit& u) { return u.absent; });
}

fs::path UnitCachePath(const RunConfig& config, const WorkUnit& unit) {
  return config.cache_dir / "units" / (unit.key + ".json");
}

RunPlan PlanRun(const RunConfig& config) {
  TaskLoadResult loaded;
  try {
    loaded = LoadTasks(config.tasks_path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (!loaded.ok()) {
    std::string msg = fmt::format("task file {} has errors:", config.tasks_path.string());
    for (const auto& d : loaded.errors()) msg += fmt::format("\n  line {}: {} {}", d.line, d.task_id, d.message);
    throw ConfigError(msg);
  }
  if (loaded.tasks.empty()) throw ConfigError(fmt::format("task file {} holds no tasks", config.tasks_path.string()));
  return PlanRun(config, std::move(loaded.tasks));
}

RunPlan PlanRun(const RunConfig& config, std::vector<BenchmarkTask> tasks) {
  RunPlan plan;
  plan.tasks = std::move(tasks);
  for (const auto& system : config.systems) {
    for (const auto& task : plan.tasks) {
      const auto report_path = system.reports_dir / (task.id + ".md");
      const auto report = ReadFile(report_path);
      for (const auto& metric : config.metrics) {
        WorkUnit unit{system.name, task.id, metric, "", report_path, {}, "", false, false, ""};
        std::optional<std::string> baseline_report = std::string();
        if (metric == kMetricDepth) {
          if (system.name == *config.depth_baseline) continue;
          unit.baseline = *config.depth_baseline;
          unit.baseline_path = config.system(unit.baseline)->reports_dir / (task.id + ".md");
          baseline_report = ReadFile(unit.baseline_path);
        }
        if (!report) {
          unit.absent = true;
          unit.absent_reason = fmt::format("missing report {}", report_path.string());
        } else if (!baseline_report) {
          unit.absent = true;
          unit.absent_reason = fmt::format("missing baseline report {}", unit.baseline_path.string());
        } else {
          unit.key = Sha256Hex(UnitKeyRecord(config, unit, task, *report, *baseline_report).dump());
          unit.skippable = fs::exists(UnitCachePath(config, unit));
        }
        plan.units.push_back(std::move(unit));
      }
    }
  }
  return plan;
}

Orchestrator::Orchestrator(RunConfig config, RunOptions options)
    : config_(std::move(config)), options_(std::move(options)) {
  JudgeGateway::Options gopts;
  gopts.transcript_dir = config_.run_dir() / "transcripts";
  gateway_ = std::make_unique<JudgeGateway>(config_.judges, gopts);
  engines_ = std::make_unique<MetricEngines>(*gateway_, config_.rubrics);
  if (config_.fetch) {
    FetchPolicy policy = *config_.fetch;
    policy.offline = options_.offline;
    policy.base_url_override = options_.mock_base_url;
    fetcher_ = std::make_unique<Fetcher>(policy);
    verifier_ = std::make_unique<CitationVerifier>(*gateway_, *fetcher_,
                                                   VerifierOptions{config_.paywall_unverifiable});
  }
}

Orchestrator::~Orchestrator() = default;

void Orchestrator::SetTransport(const std::string& judge_id, std::unique_ptr<JudgeTransport> transport) {
  gateway_->SetTransport(judge_id, std::move(transport));
}

void Orchestrator::Preflight(const RunPlan& plan, const std::vector<std::size_t>& todo) {
  if (todo.empty()) return;
  const auto down = gateway_->Preflight();
  for (const auto& [id, error] : down) spdlog::warn("judge {} unreachable: {}", id, error);
  if (down.size() == gateway_->roster().size()) {
    std::string detail;
    for (const auto& [id, error] : down) detail += fmt::format("\n  {}: {}", id, error);
    throw PreflightError("every judge in the roster is unreachable; nothing was run" + detail);
  }
  if (!options_.offline || !fetcher_) return;
  for (std::size_t i : todo) {
    const auto& unit = plan.units[i];
    if (unit.metric_id != kMetricAccuracy) continue;
    const auto report = ParseReport(ReadFile(unit.report_path).value_or(""));
    for (const auto& pair : ExtractClaimCitationPairs(report)) {
      for (const auto& url : pair.urls) {
        const auto key = NormalizeUrl(url).value_or(url);
        if (!fs::exists(fetcher_->CachePath(key))) {
          throw PreflightError(fmt::format("cache required for {} in offline mode (cited by {})", key,
                                           unit.report_path.string()));
        }
      }
    }
  }
}

RunRecord Orchestrator::RunUnit(const WorkUnit& unit, const BenchmarkTask& task) {
  RunRecord r;
  r.system = unit.system;
  r.task_id = unit.task_id;
  r.category = CategoryLabel(task);
  r.metric_id = unit.metric_id;
  r.report_path = fmt::format("{}/{}.md", unit.system, unit.task_id);
  r.baseline = unit.baseline;

  const auto resolved = ResolveDate(task, config_.eval_date, config_.date_format);
  const auto report = ReadFile(unit.report_path);
  if (!report) throw std::runtime_error(fmt::format("cannot read {}", unit.report_path.string()));

  if (unit.metric_id == kMetricPresentation || unit.metric_id == kMetricCoverage) {
    auto m = engines_->ScoreChecklistMetric(unit.metric_id, resolved, *report);
    r.score = m.score;
    r.transcripts = TranscriptIds(m);
    r.warnings = m.warnings;
    r.detail = MetricScoreToJson(m);
  } else if (unit.metric_id == kMetricConsistency || unit.metric_id == kMetricAssociation) {
    auto m = engines_->ScorePointwiseMetric(unit.metric_id, resolved, *report);
    r.score = m.score;
    r.transcripts = TranscriptIds(m);
    r.warnings = m.warnings;
    r.detail = MetricScoreToJson(m);
  } else if (unit.metric_id == kMetricDepth) {
    const auto baseline = ReadFile(unit.baseline_path);
    if (!baseline) throw std::runtime_error(fmt::format("cannot read {}", unit.baseline_path.string()));
    auto outcome = engines_->ScoreDepthPair(resolved, *report, *baseline);
    if (outcome) {
      for (const auto& call : outcome->calls) {
        if (!call.transcript_id.empty()) r.transcripts.push_back(call.transcript_id);
      }
      r.warnings = outcome->warnings;
      r.depth = std::move(outcome);
    } else {
      r.warnings.push_back("depth unavailable: every call failed");
    }
  } else if (unit.metric_id == kMetricAccuracy) {
    if (!verifier_) throw std::logic_error("accuracy unit without a fetch policy");
    auto summary = verifier_->Audit(resolved, ParseReport(*report));
    r.warnings = summary.warnings;
    r.citation = std::move(summary);
  } else {
    throw std::logic_error(fmt::format("unknown metric {}", unit.metric_id));
  }
  const bool has_result = r.score || r.depth || r.citation;
  r.status = has_result ? "ok" : "unavailable";
  return r;
}

RunSummary Orchestrator::Execute(const RunPlan& plan) {
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < plan.units.size(); ++i) {
    if (!plan.units[i].absent && !plan.units[i].skippable) todo.push_back(i);
  }
  RunSummary summary;
  if (options_.stop_after && *options_.stop_after < todo.size()) {
    todo.resize(*options_.stop_after);
    summary.interrupted = true;
  }
  Preflight(plan, todo);

  std::map<std::string, const BenchmarkTask*> tasks;
  for (const auto& t : plan.tasks) tasks[t.id] = &t;

  std::vector<std::optional<RunRecord>> results(todo.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      const auto& unit = plan.units[todo[k]];
      spdlog::info("running {} / {} / {}", unit.system, unit.task_id, unit.metric_id);
      RunRecord record;
      try {
        record = RunUnit(unit, *tasks.at(unit.task_id));
        WriteAtomic(UnitCachePath(config_, unit), RunRecordToJson(record).dump(2) + "\n");
      } catch (const std::exception& e) {
        spdlog::error("unit {} / {} / {} failed: {}", unit.system, unit.task_id, unit.metric_id, e.what());
        record.system = unit.system;
        record.task_id = unit.task_id;
        record.category = CategoryLabel(*tasks.at(unit.task_id));
        record.metric_id = unit.metric_id;
        record.report_path = fmt::format("{}/{}.md", unit.system, unit.task_id);
        record.baseline = unit.baseline;
        record.status = "failed";
        record.warnings = {e.what()};
      }
      results[k] = std::move(record);
    }
  };
  const std::size_t n_workers = std::min<std::size_t>(config_.unit_concurrency, std::max<std::size_t>(todo.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::map<std::size_t, RunRecord> fresh;
  for (std::size_t k = 0; k < todo.size(); ++k) fresh.emplace(todo[k], std::move(*results[k]));
  summary.executed = todo.size();
  if (summary.interrupted) {
    spdlog::warn("stopped after {} unit(s); rerun to resume", todo.size());
    return summary;
  }
  return Finish(plan, std::move(fresh), std::move(summary));
}

RunSummary Orchestrator::Report(const RunPlan& plan) { return Finish(plan, {}, RunSummary{}); }

RunSummary Orchestrator::Finish(const RunPlan& plan, std::map<std::size_t, RunRecord> fresh, RunSummary summary) {
  std::map<std::string, const BenchmarkTask*> tasks;
  for (const auto& t : plan.tasks) tasks[t.id] = &t;

  for (std::size_t i = 0; i < plan.units.size(); ++i) {
    const auto& unit = plan.units[i];
    RunRecord record;
    if (auto it = fresh.find(i); it != fresh.end()) {
      record = std::move(it->second);
    } else if (!unit.absent && fs::exists(UnitCachePath(config_, unit))) {
      record = RunRecordFromJson(json::parse(*ReadFile(UnitCachePath(config_, unit))));
      ++summary.skipped;
    } else {
      record.system = unit.system;
      record.task_id = unit.task_id;
      record.category = CategoryLabel(*tasks.at(unit.task_id));
      record.metric_id = unit.metric_id;
      record.report_path = fmt::format("{}/{}.md", unit.system, unit.task_id);
      record.baseline = unit.baseline;
      record.status = unit.absent ? "absent" : "pending";
      record.warnings = {unit.absent ? unit.absent_reason : "not evaluated yet"};
    }
    if (record.status == "absent") ++summary.absent;
    if (record.status == "unavailable") ++summary.unavailable;
    if (record.status == "failed") ++summary.failed;
    summary.records.push_back(std::move(record));
  }
  summary.aggregate = AggregateRecords(summary.records);
  WriteResults(plan, summary);
  return summary;
}

void Orchestrator::WriteResults(const RunPlan& plan, const RunSummary& summary) const {
  const auto dir = config_.run_dir();
  const auto& agg = summary.aggregate;
  WriteAtomic(dir / "leaderboard.json", AggregateToJson(agg).dump(2) + "\n");
  WriteAtomic(dir / "leaderboard.csv", RenderLeaderboardCsv(agg));
  WriteAtomic(dir / "leaderboard.md", RenderMarkdown(agg));
  WriteAtomic(dir / "winrate.csv", RenderWinRateCsv(agg));
  WriteAtomic(dir / "citation_errors.csv", RenderCitationCsv(agg));

  std::string lines;
  for (const auto& r : summary.records) lines += RunRecordToJson(r).dump() + "\n";
  WriteAtomic(dir / "records.jsonl", lines);

  json units = json::array();
  std::map<std::string, int> by_status;
  for (std::size_t i = 0; i < plan.units.size(); ++i) {
    const auto& u = plan.units[i];
    const auto& status = summary.records[i].status;
    ++by_status[status];
    json entry{{"system", u.system}, {"task_id", u.task_id}, {"metric_id", u.metric_id}, {"status", status}};
    if (!u.baseline.empty()) entry["baseline"] = u.baseline;
    entry["key"] = u.key.empty() ? json(nullptr) : json(u.key);
    if (u.absent) entry["reason"] = u.absent_reason;
    units.push_back(std::move(entry));
  }
  json judges = json::array();
  for (const auto& j : config_.judges) judges.push_back({{"judge_id", j.judge_id}, {"model_name", j.model_name}});
  json task_ids = json::array();
  for (const auto& t : plan.tasks) task_ids.push_back(t.id);
  json systems = json::array();
  for (const auto& s : config_.systems) systems.push_back(s.name);
  json manifest{{"run_id", config_.run_id},
                {"config_sha256", config_.hash()},
                {"config", config_.document},
                {"eval_date", FormatIsoDate(config_.eval_date)},
                {"date_format", config_.date_format},
                {"tasks", task_ids},
                {"systems", systems},
                {"judges", judges},
                {"metrics", config_.metrics},
                {"depth_baseline", config_.depth_baseline ? json(*config_.depth_baseline) : json(nullptr)},
                {"status_counts", by_status},
                {"units", units}};
  WriteAtomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace deepeval
