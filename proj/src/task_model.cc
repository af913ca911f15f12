#include "deepeval/task_model.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <fmt/format.h>

namespace deepeval {
namespace {

using json = nlohmann::json;

// Lowercase, "&" -> "and", punctuation collapsed to single spaces.
std::string NormalizeLabel(std::string_view label) {
  std::string out;
  bool pending_space = false;
  auto emit = [&](std::string_view piece) {
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.append(piece);
  };
  for (char ch : label) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      char lower = static_cast<char>(std::tolower(c));
      emit(std::string_view(&lower, 1));
    } else if (ch == '&') {
      pending_space = true;
      emit("and");
      pending_space = true;
    } else {
      pending_space = true;
    }
  }
  return out;
}

constexpr std::array<std::pair<Domain, std::string_view>, 7> kDomains{{
    {Domain::kScienceTechnology, "Science & Technology"},
    {Domain::kEconomyBusiness, "Economy & Business"},
    {Domain::kHealthWellbeing, "Health & Wellbeing"},
    {Domain::kLawGovernance, "Law & Governance"},
    {Domain::kSocietyCulture, "Society & Culture"},
    {Domain::kEducationKnowledge, "Education & Knowledge"},
    {Domain::kMediaEntertainment, "Media & Entertainment"},
}};

struct CategoryAlias {
  Category category;
  std::string_view alias;
};

constexpr std::array<CategoryAlias, 17> kCategoryAliases{{
    {Category::kMarketAnalysis, "market analysis"},
    {Category::kTechnicalSupport, "technical support"},
    {Category::kDecisionSupport, "decision support"},
    {Category::kPolicyRegulation, "policy and regulation"},
    {Category::kLiteratureReview, "literature review"},
    {Category::kCompetitiveAnalysis, "competitive analysis"},
    {Category::kProsCons, "pros and cons comparison"},
    {Category::kProsCons, "pros and cons"},
    {Category::kWideInfoSearch, "wide information search"},
    {Category::kWideInfoSearch, "wide info search"},
    {Category::kTopicExploration, "topic exploration"},
    {Category::kTopicExploration, "topic understanding"},
    {Category::kTopRankings, "top rankings"},
    {Category::kTopRankings, "top ranking"},
    {Category::kPolicyRegulation, "policy regulation"},
    {Category::kMarketAnalysis, "market analyses"},
    {Category::kWideInfoSearch, "wide search"},
}};

constexpr std::array<std::string_view, 12> kMonths{
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

std::string TaskLabelFor(const BenchmarkTask& t) { return t.id.empty() ? "<no id>" : t.id; }

}  // namespace

Domain ParseDomain(std::string_view label) {
  const std::string norm = NormalizeLabel(label);
  for (const auto& [d, name] : kDomains) {
    if (NormalizeLabel(name) == norm) return d;
  }
  return Domain::kUnknown;
}

Category ParseCategory(std::string_view label) {
  const std::string norm = NormalizeLabel(label);
  for (const auto& a : kCategoryAliases) {
    if (a.alias == norm) return a.category;
  }
  return Category::kUnknown;
}

std::string_view DomainName(Domain d) {
  for (const auto& [dom, name] : kDomains) {
    if (dom == d) return name;
  }
  return "Unknown";
}

std::string_view CategoryName(Category c) {
  switch (c) {
    case Category::kMarketAnalysis: return "Market Analysis";
    case Category::kTechnicalSupport: return "Technical Support";
    case Category::kDecisionSupport: return "Decision Support";
    case Category::kPolicyRegulation: return "Policy & Regulation";
    case Category::kLiteratureReview: return "Literature Review";
    case Category::kCompetitiveAnalysis: return "Competitive Analysis";
    case Category::kProsCons: return "Pros & Cons Comparison";
    case Category::kWideInfoSearch: return "Wide Info Search";
    case Category::kTopicExploration: return "Topic Exploration";
    case Category::kTopRankings: return "Top Rankings";
    case Category::kUnknown: break;
  }
  return "Unknown";
}

bool TaskLoadResult::ok() const { return errors().empty(); }

std::vector<TaskDiagnostic> TaskLoadResult::errors() const {
  std::vector<TaskDiagnostic> out;
  std::copy_if(diagnostics.begin(), diagnostics.end(), std::back_inserter(out),
               [](const TaskDiagnostic& d) { return d.severity == TaskDiagnostic::Severity::kError; });
  return out;
}

TaskLoadResult ParseTasks(std::string_view text) {
  TaskLoadResult result;
  std::set<std::string> seen_ids;
  auto report = [&](TaskDiagnostic::Severity sev, std::size_t line, std::string id, std::string msg) {
    result.diagnostics.push_back({sev, line, std::move(id), std::move(msg)});
  };
  constexpr auto kErr = TaskDiagnostic::Severity::kError;
  constexpr auto kWarn = TaskDiagnostic::Severity::kWarning;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (eol == text.size()) break;
      continue;
    }

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      report(kErr, line_no, "", fmt::format("malformed record: {}", e.what()));
      continue;
    }
    if (!record.is_object()) {
      report(kErr, line_no, "", "malformed record: expected a JSON object");
      continue;
    }

    BenchmarkTask task;
    std::vector<std::string> problems;
    auto get_string = [&](const char* key, std::string& out) {
      auto it = record.find(key);
      if (it == record.end()) {
        problems.push_back(fmt::format("missing field '{}'", key));
      } else if (!it->is_string()) {
        problems.push_back(fmt::format("field '{}' must be a string", key));
      } else {
        out = it->get<std::string>();
      }
    };
    get_string("id", task.id);
    get_string("query_template", task.query_template);
    get_string("domain", task.domain_label);
    get_string("category", task.category_label);
    if (task.id.empty() && problems.empty()) problems.push_back("id empty");

    auto cl = record.find("coverage_checklist");
    if (cl == record.end() || !cl->is_array()) {
      problems.push_back("coverage_checklist missing or not a list");
    } else if (cl->empty()) {
      problems.push_back("coverage_checklist empty");
    } else {
      std::set<int> item_ids;
      for (const auto& item : *cl) {
        if (!item.is_object() || !item.contains("item_id") || !item["item_id"].is_number_integer() ||
            !item.contains("text") || !item["text"].is_string()) {
          problems.push_back("checklist item needs integer 'item_id' and string 'text'");
          continue;
        }
        ChecklistItem ci{item["item_id"].get<int>(), item["text"].get<std::string>()};
        if (ci.text.find_first_not_of(" \t\r\n") == std::string::npos) {
          problems.push_back(fmt::format("checklist item {} has empty text", ci.item_id));
          continue;
        }
        if (!item_ids.insert(ci.item_id).second) {
          problems.push_back(fmt::format("duplicate checklist item id {}", ci.item_id));
          continue;
        }
        std::string_view trimmed = ci.text;
        trimmed.remove_suffix(trimmed.size() - (trimmed.find_last_not_of(" \t\r\n") + 1));
        if (!trimmed.ends_with('?')) {
          report(kWarn, line_no, task.id,
                 fmt::format("checklist item {} is not phrased as a question", ci.item_id));
        }
        task.coverage_checklist.push_back(std::move(ci));
      }
    }

    if (!problems.empty()) {
      for (auto& p : problems) report(kErr, line_no, TaskLabelFor(task), std::move(p));
      continue;
    }
    if (!seen_ids.insert(task.id).second) {
      report(kErr, line_no, task.id, fmt::format("duplicate task id \"{}\"", task.id));
      continue;
    }

    task.domain = ParseDomain(task.domain_label);
    task.category = ParseCategory(task.category_label);
    if (task.domain == Domain::kUnknown) {
      report(kWarn, line_no, task.id, fmt::format("unknown domain \"{}\"", task.domain_label));
    }
    if (task.category == Category::kUnknown) {
      report(kWarn, line_no, task.id, fmt::format("unknown category \"{}\"", task.category_label));
    }
    result.tasks.push_back(std::move(task));
    if (eol == text.size()) break;
  }
  return result;
}

TaskLoadResult LoadTasks(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TaskFileError("cannot read task file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw TaskFileError("error reading task file: " + path.string());
  return ParseTasks(buf.str());
}

nlohmann::json TaskToJson(const BenchmarkTask& task) {
  json items = json::array();
  for (const auto& item : task.coverage_checklist) {
    items.push_back({{"item_id", item.item_id}, {"text", item.text}});
  }
  return {{"id", task.id},
          {"query_template", task.query_template},
          {"domain", task.domain_label},
          {"category", task.category_label},
          {"coverage_checklist", std::move(items)}};
}

std::string SerializeTasks(const std::vector<BenchmarkTask>& tasks) {
  std::string out;
  for (const auto& t : tasks) {
    out += TaskToJson(t).dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

std::chrono::year_month_day ParseIsoDate(std::string_view text) {
  auto bad = [&] { return std::invalid_argument(fmt::format("invalid ISO-8601 date \"{}\"", text)); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  auto field = [&](std::size_t off, std::size_t len) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data() + off, text.data() + off + len, v);
    if (ec != std::errc() || ptr != text.data() + off + len) throw bad();
    return v;
  };
  const std::chrono::year_month_day ymd{std::chrono::year{field(0, 4)},
                                        std::chrono::month{static_cast<unsigned>(field(5, 2))},
                                        std::chrono::day{static_cast<unsigned>(field(8, 2))}};
  if (!ymd.ok()) throw bad();
  return ymd;
}

std::string FormatIsoDate(std::chrono::year_month_day date) { return FormatDate(date, "iso"); }

std::string FormatDate(std::chrono::year_month_day date, std::string_view format) {
  if (format == "long") format = "%B %e, %Y";
  if (format == "iso") format = "%Y-%m-%d";
  const int year = static_cast<int>(date.year());
  const unsigned month = static_cast<unsigned>(date.month());
  const unsigned day = static_cast<unsigned>(date.day());
  const std::string_view month_name = (month >= 1 && month <= 12) ? kMonths[month - 1] : "?";

  std::string out;
  for (std::size_t i = 0; i < format.size(); ++i) {
    if (format[i] != '%' || i + 1 == format.size()) {
      out.push_back(format[i]);
      continue;
    }
    switch (format[++i]) {
      case 'Y': out += fmt::format("{:04d}", year); break;
      case 'm': out += fmt::format("{:02d}", month); break;
      case 'd': out += fmt::format("{:02d}", day); break;
      case 'e': out += std::to_string(day); break;
      case 'B': out += month_name; break;
      case 'b': out += month_name.substr(0, 3); break;
      case '%': out.push_back('%'); break;
      default:
        out.push_back('%');
        out.push_back(format[i]);
    }
  }
  return out;
}

std::string SubstituteDate(std::string_view text, std::string_view rendered) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (true) {
    const std::size_t hit = text.find(kDatePlaceholder, pos);
    if (hit == std::string_view::npos) break;
    out.append(text.substr(pos, hit - pos));
    out.append(rendered);
    pos = hit + kDatePlaceholder.size();
  }
  out.append(text.substr(pos));
  return out;
}

ResolvedTask ResolveDate(const BenchmarkTask& task, std::chrono::year_month_day eval_date,
                         std::string_view format) {
  std::string rendered = FormatDate(eval_date, format);
  if (rendered.empty()) throw std::invalid_argument("date format renders to empty text");
  if (rendered.find(kDatePlaceholder) != std::string::npos) {
    throw std::invalid_argument("date format renders the placeholder itself");
  }
  ResolvedTask resolved{task, eval_date, SubstituteDate(task.query_template, rendered)};
  for (auto& item : resolved.task.coverage_checklist) {
    item.text = SubstituteDate(item.text, rendered);
  }
  return resolved;
}

}  // namespace deepeval
