#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepeval/aggregator.h"
#include "deepeval/run_config.h"
#include "deepeval/task_model.h"

namespace deepeval {

/// One (system, task, metric) evaluation. Depth units compare `system`
/// (presented as A) against `baseline` (B).
struct WorkUnit {
  std::string system;
  std::string task_id;
  std::string metric_id;
  std::string baseline;
  std::filesystem::path report_path;
  std::filesystem::path baseline_path;
  std::string key;  // unit cache address; empty when absent
  bool absent = false;
  bool skippable = false;
  std::string absent_reason;
};

struct RunPlan {
  std::vector<BenchmarkTask> tasks;
  std::vector<WorkUnit> units;

  std::size_t count_skippable() const;
  std::size_t count_absent() const;
};

/// Enumerates units in (system, task, metric) order. Throws ConfigError when
/// the task file has errors.
RunPlan PlanRun(const RunConfig& config);
RunPlan PlanRun(const RunConfig& config, std::vector<BenchmarkTask> tasks);

std::filesystem::path UnitCachePath(const RunConfig& config, const WorkUnit& unit);

/// Raised before any unit runs: every judge unreachable, or offline mode
/// with pages missing from the cache.
class PreflightError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  bool offline = false;
  std::optional<std::string> mock_base_url;
  std::optional<std::size_t> stop_after;  // simulate an interruption after this many units
};

struct RunSummary {
  std::size_t executed = 0;
  std::size_t skipped = 0;
  std::size_t absent = 0;
  std::size_t unavailable = 0;
  std::size_t failed = 0;
  bool interrupted = false;
  std::vector<RunRecord> records;
  Aggregate aggregate;
};

class Orchestrator {
 public:
  Orchestrator(RunConfig config, RunOptions options = {});
  ~Orchestrator();

  /// Replaces one judge's transport before Execute.
  void SetTransport(const std::string& judge_id, std::unique_ptr<JudgeTransport> transport);

  /// Runs every non-skippable unit, then writes the results directory
  /// unless interrupted.
  RunSummary Execute(const RunPlan& plan);
  /// Aggregates whatever the unit cache holds, running nothing.
  RunSummary Report(const RunPlan& plan);

  const RunConfig& config() const { return config_; }

 private:
  RunRecord RunUnit(const WorkUnit& unit, const BenchmarkTask& task);
  void Preflight(const RunPlan& plan, const std::vector<std::size_t>& todo);
  RunSummary Finish(const RunPlan& plan, std::map<std::size_t, RunRecord> fresh, RunSummary summary);
  void WriteResults(const RunPlan& plan, const RunSummary& summary) const;

  RunConfig config_;
  RunOptions options_;
  std::unique_ptr<JudgeGateway> gateway_;
  std::unique_ptr<Fetcher> fetcher_;
  std::unique_ptr<MetricEngines> engines_;
  std::unique_ptr<CitationVerifier> verifier_;
};

}  // namespace deepeval
