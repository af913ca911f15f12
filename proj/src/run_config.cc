#include "deepeval/run_config.h"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "deepeval/hashing.h"
#include "deepeval/task_model.h"

namespace deepeval {
namespace {

using json = nlohmann::json;

std::filesystem::path Resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string RequireString(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_string() || doc[key].get<std::string>().empty()) {
    throw ConfigError(fmt::format("config: \"{}\" must be a nonempty string", key));
  }
  return doc[key].get<std::string>();
}

std::chrono::milliseconds Seconds(double s) {
  return std::chrono::milliseconds(static_cast<long long>(s * 1000.0 + 0.5));
}

FetchPolicy ParseFetch(const json& j, const std::filesystem::path& cache_dir, bool* paywall) {
  if (!j.is_object()) throw ConfigError("config: \"fetch\" must be an object");
  FetchPolicy p;
  p.timeout = Seconds(j.value("timeout_s", 30.0));
  p.max_redirects = j.value("max_redirects", p.max_redirects);
  p.prefix_words = j.value("prefix_words", p.prefix_words);
  p.user_agent = j.value("user_agent", p.user_agent);
  p.global_cap = j.value("global_cap", p.global_cap);
  p.per_host_cap = j.value("per_host_cap", p.per_host_cap);
  p.cache_dir = cache_dir / "pages";
  *paywall = j.value("paywall_unverifiable", false);
  if (p.timeout.count() <= 0) throw ConfigError("config: fetch.timeout_s must be > 0");
  if (p.max_redirects < 0) throw ConfigError("config: fetch.max_redirects must be >= 0");
  if (p.prefix_words == 0) throw ConfigError("config: fetch.prefix_words must be > 0");
  if (p.global_cap < 1 || p.per_host_cap < 1) throw ConfigError("config: fetch caps must be >= 1");
  return p;
}

}  // namespace

bool RunConfig::selected(std::string_view metric) const {
  return std::find(metrics.begin(), metrics.end(), metric) != metrics.end();
}

std::string RunConfig::hash() const { return Sha256Hex(document.dump()); }

const SystemEntry* RunConfig::system(std::string_view name) const {
  for (const auto& s : systems) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

nlohmann::json LoadConfigDocument(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ConfigError(fmt::format("config {} is not a JSON object", path.string()));
  }
  return doc;
}

RunConfig RunConfigFromJson(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  c.document = doc;
  try {
    c.run_id = RequireString(doc, "run_id");
    if (c.run_id.find('/') != std::string::npos || c.run_id == "." || c.run_id == "..") {
      throw ConfigError("config: run_id must be a plain name");
    }
    c.tasks_path = Resolve(base_dir, RequireString(doc, "tasks"));
    const auto reports_dir = Resolve(base_dir, doc.value("reports_dir", "reports"));
    c.cache_dir = Resolve(base_dir, doc.value("cache_dir", "cache"));
    c.output_dir = Resolve(base_dir, doc.value("output_dir", "results"));

    const json systems = doc.value("systems", json());
    if (systems.is_array()) {
      for (const auto& s : systems) c.systems.push_back({s.get<std::string>(), reports_dir / s.get<std::string>()});
    } else if (systems.is_object()) {
      for (const auto& [name, dir] : systems.items()) c.systems.push_back({name, Resolve(base_dir, dir.get<std::string>())});
    } else {
      throw ConfigError("config: \"systems\" must be a list of names or a name -> directory map");
    }
    if (c.systems.empty()) throw ConfigError("config: no systems");
    std::sort(c.systems.begin(), c.systems.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    for (std::size_t i = 0; i < c.systems.size(); ++i) {
      if (c.systems[i].name.empty() || c.systems[i].name.find('/') != std::string::npos) {
        throw ConfigError(fmt::format("config: bad system name \"{}\"", c.systems[i].name));
      }
      if (i > 0 && c.systems[i].name == c.systems[i - 1].name) {
        throw ConfigError(fmt::format("config: duplicate system {}", c.systems[i].name));
      }
    }

    if (!doc.contains("judges") || !doc["judges"].is_array() || doc["judges"].empty()) {
      throw ConfigError("config: \"judges\" must be a nonempty list");
    }
    std::set<std::string> judge_ids;
    for (const auto& j : doc["judges"]) {
      auto judge = JudgeConfigFromJson(j);
      if (judge.endpoint.starts_with("script:")) {
        judge.endpoint = "script:" + Resolve(base_dir, judge.endpoint.substr(7)).string();
      }
      judge.Validate();
      if (!judge_ids.insert(judge.judge_id).second) throw ConfigError(fmt::format("config: duplicate judge {}", judge.judge_id));
      c.judges.push_back(std::move(judge));
    }

    const json metrics = doc.value("metrics", json(AllMetricIds()));
    if (!metrics.is_array() || metrics.empty()) throw ConfigError("config: \"metrics\" must be a nonempty list");
    std::set<std::string> chosen;
    for (const auto& m : metrics) {
      const auto id = m.get<std::string>();
      if (!IsMetricId(id)) {
        throw ConfigError(fmt::format("config: unknown metric \"{}\" (expected one of {})", id,
                                      fmt::join(AllMetricIds(), ", ")));
      }
      chosen.insert(id);
    }
    for (const auto& id : AllMetricIds()) {
      if (chosen.count(id)) c.metrics.push_back(id);
    }

    try {
      c.eval_date = ParseIsoDate(RequireString(doc, "eval_date"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(fmt::format("config: eval_date: {}", e.what()));
    }
    c.date_format = doc.value("date_format", "long");
    FormatDate(c.eval_date, c.date_format);

    if (doc.contains("depth_baseline") && !doc["depth_baseline"].is_null()) {
      c.depth_baseline = doc["depth_baseline"].get<std::string>();
    }
    if (c.selected(kMetricDepth)) {
      if (!c.depth_baseline) throw ConfigError("config: depth selected but no depth_baseline");
      if (!c.system(*c.depth_baseline)) {
        throw ConfigError(fmt::format("config: depth_baseline {} is not a listed system", *c.depth_baseline));
      }
    }

    if (doc.contains("fetch") && !doc["fetch"].is_null()) {
      c.fetch = ParseFetch(doc["fetch"], c.cache_dir, &c.paywall_unverifiable);
    }
    if (c.selected(kMetricAccuracy) && !c.fetch) throw ConfigError("config: accuracy selected but no fetch policy");

    const json concurrency = doc.value("concurrency", json::object());
    c.unit_concurrency = concurrency.value("units", 4);
    if (c.unit_concurrency < 1 || c.unit_concurrency > 256) throw ConfigError("config: concurrency.units must be in [1, 256]");

    const json bands = doc.value("band_tables", json::object());
    if (bands.contains("consistency")) c.rubrics.consistency_rubric = RubricBandTable::FromJson(bands["consistency"]);
    if (bands.contains("association")) {
      c.rubrics.association_rubric = RubricBandTable::FromJson(bands["association"], "Uncited Claims");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }
  return c;
}

}  // namespace deepeval
