#include "deepeval/aggregator.h"

#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

namespace deepeval {
namespace {

using json = nlohmann::json;

json OptionalNumber(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> ReadOptional(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

std::string MetricHeader(const std::string& id) {
  if (id == kMetricPresentation) return "Presentation & Organization";
  if (id == kMetricConsistency) return "Fact & Logic Consistency";
  if (id == kMetricCoverage) return "Coverage & Comprehensiveness";
  if (id == kMetricAssociation) return "Citation Association";
  return id;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string CsvNumber(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }

std::string MarkdownEscape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

const std::vector<std::string>& LeaderboardMetrics() {
  static const std::vector<std::string> kIds{std::string(kMetricPresentation), std::string(kMetricConsistency),
                                             std::string(kMetricCoverage), std::string(kMetricAssociation)};
  return kIds;
}

json RunRecordToJson(const RunRecord& r) {
  json j{{"system", r.system},
         {"task_id", r.task_id},
         {"category", r.category},
         {"metric_id", r.metric_id},
         {"report_path", r.report_path},
         {"status", r.status},
         {"score", OptionalNumber(r.score)},
         {"transcripts", r.transcripts},
         {"warnings", r.warnings}};
  j["depth"] = r.depth ? PairOutcomeToJson(*r.depth) : json(nullptr);
  j["baseline"] = r.baseline;
  j["citation"] = r.citation ? CitationAuditToJson(*r.citation) : json(nullptr);
  j["detail"] = r.detail;
  return j;
}

RunRecord RunRecordFromJson(const json& j) {
  RunRecord r;
  r.system = j.at("system").get<std::string>();
  r.task_id = j.at("task_id").get<std::string>();
  r.category = j.value("category", "");
  r.metric_id = j.at("metric_id").get<std::string>();
  r.report_path = j.value("report_path", "");
  r.status = j.value("status", "ok");
  r.score = ReadOptional(j, "score");
  r.transcripts = j.value("transcripts", std::vector<std::string>{});
  r.warnings = j.value("warnings", std::vector<std::string>{});
  if (j.contains("depth") && !j["depth"].is_null()) r.depth = PairOutcomeFromJson(j["depth"]);
  r.baseline = j.value("baseline", "");
  if (j.contains("citation") && !j["citation"].is_null()) r.citation = CitationAuditFromJson(j["citation"]);
  r.detail = j.value("detail", json());
  return r;
}

std::string FormatOneDecimal(double value) {
  const double rounded = std::floor(value * 10.0 + 0.5 + 1e-9) / 10.0;
  std::string s = fmt::format("{:.1f}", rounded);
  return s == "-0.0" ? "0.0" : s;
}

std::string FormatCell(const std::optional<double>& value) { return value ? FormatOneDecimal(*value) : "—"; }

Aggregate AggregateRecords(std::vector<RunRecord> records) {
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.system, a.task_id, a.metric_id) < std::tie(b.system, b.task_id, b.metric_id);
  });
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& a = records[i - 1];
    const auto& b = records[i];
    if (std::tie(a.system, a.task_id, a.metric_id) == std::tie(b.system, b.task_id, b.metric_id)) {
      throw std::invalid_argument(
          fmt::format("duplicate record for system {} task {} metric {}", a.system, a.task_id, a.metric_id));
    }
  }

  Aggregate out;
  std::set<std::string> systems;
  for (const auto& r : records) systems.insert(r.system);

  for (const auto& system : systems) {
    LeaderboardRow row;
    row.system = system;
    std::vector<double> present;
    for (const auto& metric : LeaderboardMetrics()) {
      DimensionCell cell;
      std::vector<double> scores;
      std::vector<std::string> missing;
      bool evaluated = false;
      for (const auto& r : records) {
        if (r.system != system || r.metric_id != metric) continue;
        evaluated = true;
        if (r.score) {
          scores.push_back(*r.score);
          cell.sources.push_back({r.task_id, *r.score, r.transcripts});
        } else {
          missing.push_back(fmt::format("{} ({})", r.task_id, r.status));
        }
      }
      if (!scores.empty()) {
        cell.mean = EnsembleMean(scores);
        present.push_back(*cell.mean);
      }
      if (!evaluated) {
        out.footnotes.push_back(fmt::format("{}: {} not evaluated", system, metric));
      } else if (!missing.empty()) {
        out.footnotes.push_back(fmt::format("{}: {} unavailable for {}; {}", system, metric, fmt::join(missing, ", "),
                                            scores.empty() ? "excluded from Avg" : "averaged over the remaining tasks"));
      }
      row.dims.emplace(metric, std::move(cell));
    }
    if (!present.empty()) row.avg = EnsembleMean(present);
    out.leaderboard.push_back(std::move(row));

    // Depth win rate against the baseline.
    WinRateRow wr;
    wr.system = system;
    bool any_depth = false;
    std::vector<PairVerdict> verdicts;
    std::vector<std::string> depth_missing;
    for (const auto& r : records) {
      if (r.system != system || r.metric_id != kMetricDepth) continue;
      any_depth = true;
      wr.baseline = r.baseline;
      if (!r.depth) {
        depth_missing.push_back(fmt::format("{} ({})", r.task_id, r.status));
        continue;
      }
      verdicts.push_back(r.depth->verdict);
      switch (r.depth->verdict) {
        case PairVerdict::kA: ++wr.wins; break;
        case PairVerdict::kB: ++wr.losses; break;
        case PairVerdict::kTie: ++wr.ties; break;
      }
    }
    if (any_depth) {
      wr.win_rate = WinRate(verdicts, PairVerdict::kA);
      out.win_rates.push_back(wr);
      if (!depth_missing.empty()) {
        out.footnotes.push_back(
            fmt::format("{}: depth unavailable for {}", system, fmt::join(depth_missing, ", ")));
      }
    }
  }

  // Citation errors per category and system.
  std::map<std::pair<std::string, std::string>, std::vector<const CitationAuditSummary*>> by_cell;
  for (const auto& r : records) {
    if (r.metric_id != kMetricAccuracy) continue;
    if (r.citation) {
      by_cell[{r.category, r.system}].push_back(&*r.citation);
    } else {
      out.footnotes.push_back(fmt::format("{}: accuracy unavailable for {} ({})", r.system, r.task_id, r.status));
    }
  }
  for (const auto& [key, summaries] : by_cell) {
    CitationRow row;
    row.category = key.first;
    row.system = key.second;
    row.tasks = static_cast<int>(summaries.size());
    std::vector<double> e1, e2, e3, total;
    for (const auto* s : summaries) {
      e1.push_back(s->e1);
      e2.push_back(s->e2);
      e3.push_back(s->e3);
      total.push_back(s->total());
    }
    row.e1 = EnsembleMean(e1);
    row.e2 = EnsembleMean(e2);
    row.e3 = EnsembleMean(e3);
    row.total = EnsembleMean(total);
    out.citation_errors.push_back(row);
  }
  std::sort(out.footnotes.begin(), out.footnotes.end());
  return out;
}

json AggregateToJson(const Aggregate& a) {
  json board = json::array();
  for (const auto& row : a.leaderboard) {
    json dims = json::object();
    for (const auto& [metric, cell] : row.dims) {
      json sources = json::array();
      for (const auto& s : cell.sources) {
        sources.push_back({{"task_id", s.task_id}, {"score", s.score}, {"transcripts", s.transcripts}});
      }
      dims[metric] = {{"mean", OptionalNumber(cell.mean)}, {"sources", sources}};
    }
    board.push_back({{"system", row.system}, {"dims", dims}, {"avg", OptionalNumber(row.avg)}});
  }
  json wins = json::array();
  for (const auto& w : a.win_rates) {
    wins.push_back({{"system", w.system},
                    {"baseline", w.baseline},
                    {"wins", w.wins},
                    {"losses", w.losses},
                    {"ties", w.ties},
                    {"win_rate", OptionalNumber(w.win_rate)}});
  }
  json cites = json::array();
  for (const auto& c : a.citation_errors) {
    cites.push_back({{"category", c.category},
                     {"system", c.system},
                     {"tasks", c.tasks},
                     {"e1", c.e1},
                     {"e2", c.e2},
                     {"e3", c.e3},
                     {"total", c.total}});
  }
  return {{"leaderboard", board}, {"win_rates", wins}, {"citation_errors", cites}, {"footnotes", a.footnotes}};
}

Aggregate AggregateFromJson(const json& j) {
  Aggregate a;
  for (const auto& row : j.at("leaderboard")) {
    LeaderboardRow r;
    r.system = row.at("system").get<std::string>();
    r.avg = ReadOptional(row, "avg");
    for (const auto& [metric, cell] : row.at("dims").items()) {
      DimensionCell c;
      c.mean = ReadOptional(cell, "mean");
      for (const auto& s : cell.at("sources")) {
        c.sources.push_back({s.at("task_id").get<std::string>(), s.at("score").get<double>(),
                             s.value("transcripts", std::vector<std::string>{})});
      }
      r.dims.emplace(metric, std::move(c));
    }
    a.leaderboard.push_back(std::move(r));
  }
  for (const auto& w : j.at("win_rates")) {
    a.win_rates.push_back({w.at("system").get<std::string>(), w.at("baseline").get<std::string>(), w.at("wins").get<int>(),
                           w.at("losses").get<int>(), w.at("ties").get<int>(), ReadOptional(w, "win_rate")});
  }
  for (const auto& c : j.at("citation_errors")) {
    a.citation_errors.push_back({c.at("category").get<std::string>(), c.at("system").get<std::string>(),
                                 c.at("tasks").get<int>(), c.at("e1").get<double>(), c.at("e2").get<double>(),
                                 c.at("e3").get<double>(), c.at("total").get<double>()});
  }
  a.footnotes = j.value("footnotes", std::vector<std::string>{});
  return a;
}

std::string RenderMarkdown(const Aggregate& a) {
  std::string out = "# Leaderboard\n\n| Agent Name |";
  for (const auto& m : LeaderboardMetrics()) out += fmt::format(" {} |", MetricHeader(m));
  out += " Avg |\n|---|";
  for (std::size_t i = 0; i < LeaderboardMetrics().size(); ++i) out += "---:|";
  out += "---:|\n";
  for (const auto& row : a.leaderboard) {
    out += fmt::format("| {} |", MarkdownEscape(row.system));
    for (const auto& m : LeaderboardMetrics()) {
      auto it = row.dims.find(m);
      out += fmt::format(" {} |", FormatCell(it == row.dims.end() ? std::nullopt : it->second.mean));
    }
    out += fmt::format(" {} |\n", FormatCell(row.avg));
  }

  if (!a.win_rates.empty()) {
    out += "\n# Analysis Depth Win Rate\n\n| Agent Name | Baseline | Wins | Losses | Ties | Win Rate |\n"
           "|---|---|---:|---:|---:|---:|\n";
    for (const auto& w : a.win_rates) {
      out += fmt::format("| {} | {} | {} | {} | {} | {} |\n", MarkdownEscape(w.system), MarkdownEscape(w.baseline),
                         w.wins, w.losses, w.ties, w.win_rate ? fmt::format("{:.3f}", *w.win_rate) : "—");
    }
  }

  if (!a.citation_errors.empty()) {
    out += "\n# Citation Errors per Task\n";
    std::string category;
    for (const auto& c : a.citation_errors) {
      if (c.category != category || &c == &a.citation_errors.front()) {
        category = c.category;
        out += fmt::format("\n## Task: {}\n\n| Agent Name | E1 Errors | E2 Errors | E3 Errors | Total |\n"
                           "|---|---:|---:|---:|---:|\n",
                           category.empty() ? "(uncategorized)" : category);
      }
      out += fmt::format("| {} | {} | {} | {} | {} |\n", MarkdownEscape(c.system), FormatOneDecimal(c.e1),
                         FormatOneDecimal(c.e2), FormatOneDecimal(c.e3), FormatOneDecimal(c.total));
    }
  }

  if (!a.footnotes.empty()) {
    out += "\n# Notes\n\n";
    for (const auto& f : a.footnotes) out += fmt::format("- {}\n", f);
  }
  return out;
}

std::string RenderLeaderboardCsv(const Aggregate& a) {
  std::string out = "system";
  for (const auto& m : LeaderboardMetrics()) out += "," + m;
  out += ",avg\n";
  for (const auto& row : a.leaderboard) {
    out += CsvField(row.system);
    for (const auto& m : LeaderboardMetrics()) {
      auto it = row.dims.find(m);
      out += "," + CsvNumber(it == row.dims.end() ? std::nullopt : it->second.mean);
    }
    out += "," + CsvNumber(row.avg) + "\n";
  }
  return out;
}

std::string RenderWinRateCsv(const Aggregate& a) {
  std::string out = "system,baseline,wins,losses,ties,win_rate\n";
  for (const auto& w : a.win_rates) {
    out += fmt::format("{},{},{},{},{},{}\n", CsvField(w.system), CsvField(w.baseline), w.wins, w.losses, w.ties,
                       CsvNumber(w.win_rate));
  }
  return out;
}

std::string RenderCitationCsv(const Aggregate& a) {
  std::string out = "category,system,tasks,e1,e2,e3,total\n";
  for (const auto& c : a.citation_errors) {
    out += fmt::format("{},{},{},{},{},{},{}\n", CsvField(c.category), CsvField(c.system), c.tasks, c.e1, c.e2, c.e3,
                       c.total);
  }
  return out;
}

}  // namespace deepeval
