#include "deepeval/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "deepeval/orchestrator.h"
#include "deepeval/report_parser.h"
#include "deepeval/structural_auditor.h"

namespace deepeval {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct RunFlags {
  std::string config;
  std::vector<std::string> metrics;
  std::string depth_baseline;
  bool offline = false;
  std::string mock_base_url;
  std::size_t stop_after = 0;
};

void AddRunFlags(CLI::App* cmd, RunFlags& f, bool with_metrics) {
  cmd->add_option("-c,--config", f.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  if (with_metrics) {
    cmd->add_option("--metrics", f.metrics, "Metrics to run (overrides the config)")->delimiter(',');
    cmd->add_option("--depth-baseline", f.depth_baseline, "System the depth comparison runs against");
  }
  cmd->add_flag("--offline", f.offline, "Serve cited pages from the cache only");
  cmd->add_option("--mock-base-url", f.mock_base_url, "Send every page request to this origin");
  cmd->add_option("--stop-after", f.stop_after)->group("");
}

void ConfigureLogging(int verbosity) {
  auto logger = spdlog::get("deepeval");
  if (!logger) {
    logger = spdlog::stderr_color_mt("deepeval");
    spdlog::set_default_logger(logger);
  }
  spdlog::set_level(verbosity >= 2 ? spdlog::level::debug : verbosity == 1 ? spdlog::level::info : spdlog::level::warn);
}

RunConfig BuildConfig(const RunFlags& f, std::optional<std::vector<std::string>> force_metrics) {
  const fs::path path = fs::absolute(f.config);
  json doc = LoadConfigDocument(path);
  if (force_metrics) {
    doc["metrics"] = *force_metrics;
  } else if (!f.metrics.empty()) {
    doc["metrics"] = f.metrics;
  }
  if (!f.depth_baseline.empty()) doc["depth_baseline"] = f.depth_baseline;
  return RunConfigFromJson(doc, path.parent_path());
}

RunOptions BuildOptions(const RunFlags& f) {
  RunOptions o;
  o.offline = f.offline;
  if (!f.mock_base_url.empty()) o.mock_base_url = f.mock_base_url;
  if (f.stop_after > 0) o.stop_after = f.stop_after;
  return o;
}

void PrintSummary(std::ostream& out, const RunConfig& config, const RunSummary& s) {
  fmt::print(out, "run {}: {} executed, {} cached, {} absent, {} unavailable, {} failed\n", config.run_id, s.executed,
             s.skipped, s.absent, s.unavailable, s.failed);
  if (s.interrupted) {
    fmt::print(out, "interrupted; rerun the same command to resume\n");
    return;
  }
  fmt::print(out, "results: {}\n", config.run_dir().string());
}

int Evaluate(const RunFlags& f, std::optional<std::vector<std::string>> force_metrics, std::ostream& out) {
  const auto config = BuildConfig(f, std::move(force_metrics));
  const auto plan = PlanRun(config);
  spdlog::info("{} unit(s) planned, {} cached, {} absent", plan.units.size(), plan.count_skippable(),
               plan.count_absent());
  Orchestrator orchestrator(config, BuildOptions(f));
  const auto summary = orchestrator.Execute(plan);
  PrintSummary(out, config, summary);
  if (summary.interrupted) return kExitInterrupted;
  return summary.failed > 0 ? kExitUnitFailures : kExitOk;
}

int Report(const RunFlags& f, std::ostream& out) {
  const auto config = BuildConfig(f, std::nullopt);
  Orchestrator orchestrator(config, BuildOptions(f));
  const auto summary = orchestrator.Report(PlanRun(config));
  PrintSummary(out, config, summary);
  return summary.failed > 0 ? kExitUnitFailures : kExitOk;
}

std::vector<fs::path> MarkdownFiles(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& input : inputs) {
    if (fs::is_directory(input)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::recursive_directory_iterator(input)) {
        if (e.is_regular_file() && e.path().extension() == ".md") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(input);
    }
  }
  return files;
}

int Lint(const std::vector<std::string>& inputs, std::ostream& out, std::ostream& err) {
  bool dirty = false;
  for (const auto& file : MarkdownFiles(inputs)) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      fmt::print(err, "error: cannot read {}\n", file.string());
      return kExitConfigError;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    const auto audit = AuditReport(ParseReport(ss.str()));
    for (const auto& v : audit.violations) out << ViolationToJson(v, file.string()).dump() << "\n";
    dirty = dirty || !audit.clean();
  }
  return dirty ? kExitUnitFailures : kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evaluate deep-research reports with LLM judges and citation checks", "deepeval"};
  app.require_subcommand(1);
  app.fallthrough();
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "More logging (repeatable)");

  RunFlags eval_flags, verify_flags, report_flags;
  auto* evaluate = app.add_subcommand("evaluate", "Run the full evaluation and write the results directory");
  AddRunFlags(evaluate, eval_flags, true);
  auto* verify = app.add_subcommand("verify-citations", "Run the citation accuracy check only");
  AddRunFlags(verify, verify_flags, false);
  auto* report = app.add_subcommand("report", "Rebuild the results directory from cached units");
  AddRunFlags(report, report_flags, false);
  std::vector<std::string> lint_inputs;
  auto* lint = app.add_subcommand("lint", "Check report structure; one JSON line per violation");
  lint->add_option("paths", lint_inputs, "Report files or directories")->required();

  std::vector<std::string> argv{"deepeval"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::vector<const char*> cargs;
  for (const auto& a : argv) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }
  ConfigureLogging(verbosity);

  try {
    if (*evaluate) return Evaluate(eval_flags, std::nullopt, out);
    if (*verify) return Evaluate(verify_flags, std::vector<std::string>{"accuracy"}, out);
    if (*report) return Report(report_flags, out);
    if (*lint) return Lint(lint_inputs, out, err);
  } catch (const ConfigError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitConfigError;
  } catch (const PreflightError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUnitFailures;
  }
  return kExitConfigError;
}

}  // namespace deepeval
