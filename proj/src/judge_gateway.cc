#include "deepeval/judge_gateway.h"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "deepeval/hashing.h"
#include "deepeval/json_extract.h"
#include "deepeval/url.h"

namespace deepeval {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr int kMaxConcurrentCap = 256;
constexpr std::string_view kScriptScheme = "script:";

class HttpJudgeTransport : public JudgeTransport {
 public:
  explicit HttpJudgeTransport(JudgeConfig config) : config_(std::move(config)) {
    auto url = ParseUrl(config_.endpoint);
    if (!url || (url->scheme != "http" && url->scheme != "https")) {
      throw std::invalid_argument(fmt::format("judge {}: bad endpoint {}", config_.judge_id, config_.endpoint));
    }
    origin_ = url->origin();
    path_ = url->path;
    if (!path_.ends_with("/chat/completions")) {
      if (!path_.ends_with('/')) path_ += '/';
      path_ += "chat/completions";
    }
  }

  TransportResult Complete(const RenderedPrompt& prompt) override {
    json body{{"model", config_.model_name},
              {"temperature", config_.temperature},
              {"messages",
               json::array({{{"role", "system"}, {"content", prompt.system_text}},
                            {{"role", "user"}, {"content", prompt.user_text}}})}};
    if (config_.max_tokens) body["max_tokens"] = *config_.max_tokens;

    auto client = MakeClient();
    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
      if (const char* key = std::getenv(config_.api_key_env.c_str())) {
        headers.emplace("Authorization", fmt::format("Bearer {}", key));
      }
    }
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) return {false, "", fmt::format("transport error: {}", httplib::to_string(res.error()))};
    if (res->status != 200) return {false, "", fmt::format("HTTP {}", res->status)};
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) return {false, "", "completion body is not JSON"};
    try {
      return {true, reply.at("choices").at(0).at("message").at("content").get<std::string>(), ""};
    } catch (const json::exception&) {
      return {false, "", "completion body has no choices[0].message.content"};
    }
  }

  bool Reachable(std::string* error) override {
    auto client = MakeClient();
    auto res = client.Get("/");
    if (res) return true;
    if (error) *error = httplib::to_string(res.error());
    return false;
  }

 private:
  httplib::Client MakeClient() const {
    httplib::Client client(origin_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    return client;
  }

  JudgeConfig config_;
  std::string origin_;
  std::string path_;
};

// Replays canned completions from a JSON file:
//   {"rules": [{"metric": id, "contains": [...], "response": text|object,
//               "responses": [...], "fail": bool}],
//    "default": text|object, "unreachable": bool}
// The first rule whose metric and substrings all match wins. A "responses"
// list is consumed in order, repeating its last element.
class ScriptedJudgeTransport : public JudgeTransport {
 public:
  explicit ScriptedJudgeTransport(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument(fmt::format("cannot read judge script {}", path.string()));
    script_ = json::parse(in, nullptr, false);
    if (script_.is_discarded() || !script_.is_object()) {
      throw std::invalid_argument(fmt::format("judge script {} is not a JSON object", path.string()));
    }
    counters_.assign(script_.value("rules", json::array()).size(), 0);
  }

  TransportResult Complete(const RenderedPrompt& prompt) override {
    const std::string haystack = prompt.system_text + "\n" + prompt.user_text;
    const json rules = script_.value("rules", json::array());
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const json& rule = rules[i];
      if (rule.contains("metric") && rule["metric"] != prompt.metric_id) continue;
      bool match = true;
      for (const auto& needle : rule.value("contains", json::array())) {
        if (haystack.find(needle.get<std::string>()) == std::string::npos) {
          match = false;
          break;
        }
      }
      if (!match) continue;
      if (rule.value("fail", false)) return {false, "", "scripted transport failure"};
      if (rule.contains("responses")) {
        const json& seq = rule["responses"];
        std::size_t k;
        {
          std::lock_guard lock(mu_);
          k = counters_[i]++;
        }
        return {true, AsText(seq.at(std::min(k, seq.size() - 1))), ""};
      }
      return {true, AsText(rule.at("response")), ""};
    }
    if (script_.contains("default")) return {true, AsText(script_["default"]), ""};
    return {false, "", fmt::format("no scripted response for metric {}", prompt.metric_id)};
  }

  bool Reachable(std::string* error) override {
    if (!script_.value("unreachable", false)) return true;
    if (error) *error = "scripted judge marked unreachable";
    return false;
  }

 private:
  static std::string AsText(const json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

  json script_;
  std::mutex mu_;
  std::vector<std::size_t> counters_;
};

json ResponseToTranscript(const json& request, const JudgeResponse& r, const std::vector<json>& attempts) {
  return json{{"request", request},
              {"attempts", attempts},
              {"status", StatusName(r.status)},
              {"parsed", r.parsed ? *r.parsed : json(nullptr)},
              {"error", r.error}};
}

void WriteAtomically(const std::filesystem::path& path, const std::string& data) {
  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += fmt::format(".tmp{}", std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary);
    out << data;
  }
  std::filesystem::rename(tmp, path);
}

JudgeResponse RunAttempts(const JudgeConfig& config, JudgeTransport& transport, const RenderedPrompt& prompt,
                          const ResponseSchema& schema, std::vector<json>* attempts) {
  JudgeResponse out;
  const auto start = Clock::now();
  for (int attempt = 1; attempt <= config.max_retries + 1; ++attempt) {
    if (attempt > 1 && config.retry_backoff.count() > 0) {
      std::this_thread::sleep_for(config.retry_backoff * (attempt - 1));
    }
    out.attempt_count = attempt;
    TransportResult tr;
    try {
      tr = transport.Complete(prompt);
    } catch (const std::exception& e) {
      tr = {false, "", e.what()};
    }
    if (!tr.ok) {
      out.status = JudgeResponse::Status::kTransportFailure;
      out.error = tr.error;
      if (attempts) attempts->push_back({{"error", tr.error}});
      continue;
    }
    out.raw_text = tr.text;
    if (attempts) attempts->push_back({{"text", tr.text}});
    auto obj = ExtractJsonObject(tr.text);
    if (!obj) {
      out.status = JudgeResponse::Status::kParseFailure;
      out.error = "no JSON object in response";
      continue;
    }
    if (schema.validate) {
      if (auto problem = schema.validate(*obj)) {
        out.status = JudgeResponse::Status::kParseFailure;
        out.error = fmt::format("schema {}: {}", schema.id, *problem);
        continue;
      }
    }
    out.status = JudgeResponse::Status::kOk;
    out.parsed = std::move(obj);
    out.error.clear();
    break;
  }
  out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
  return out;
}

}  // namespace

void JudgeConfig::Validate() const {
  if (judge_id.empty()) throw std::invalid_argument("judge_id is empty");
  if (endpoint.empty()) throw std::invalid_argument(fmt::format("judge {}: endpoint is empty", judge_id));
  if (max_retries < 0) throw std::invalid_argument(fmt::format("judge {}: max_retries < 0", judge_id));
  if (timeout.count() <= 0) throw std::invalid_argument(fmt::format("judge {}: timeout must be > 0", judge_id));
  if (max_concurrent < 1 || max_concurrent > kMaxConcurrentCap) {
    throw std::invalid_argument(
        fmt::format("judge {}: max_concurrent must be in [1, {}]", judge_id, kMaxConcurrentCap));
  }
  if (!std::isfinite(temperature) || temperature < 0) {
    throw std::invalid_argument(fmt::format("judge {}: bad temperature", judge_id));
  }
}

JudgeConfig JudgeConfigFromJson(const json& j) {
  JudgeConfig c;
  c.judge_id = j.at("judge_id").get<std::string>();
  c.endpoint = j.at("endpoint").get<std::string>();
  c.model_name = j.value("model_name", "");
  c.temperature = j.value("temperature", 0.0);
  c.max_retries = j.value("max_retries", 2);
  c.timeout = std::chrono::milliseconds(static_cast<long>(j.value("timeout_s", 120.0) * 1000));
  c.api_key_env = j.value("api_key_env", "");
  if (j.contains("max_tokens") && !j["max_tokens"].is_null()) c.max_tokens = j["max_tokens"].get<int>();
  c.max_concurrent = j.value("max_concurrent", 4);
  c.retry_backoff = std::chrono::milliseconds(static_cast<long>(j.value("retry_backoff_s", 0.5) * 1000));
  c.Validate();
  return c;
}

json JudgeConfigToJson(const JudgeConfig& c) {
  json j{{"judge_id", c.judge_id},
         {"endpoint", c.endpoint},
         {"model_name", c.model_name},
         {"temperature", c.temperature},
         {"max_retries", c.max_retries},
         {"timeout_s", c.timeout.count() / 1000.0},
         {"api_key_env", c.api_key_env},
         {"max_concurrent", c.max_concurrent},
         {"retry_backoff_s", c.retry_backoff.count() / 1000.0}};
  j["max_tokens"] = c.max_tokens ? json(*c.max_tokens) : json(nullptr);
  return j;
}

std::unique_ptr<JudgeTransport> MakeTransport(const JudgeConfig& config) {
  if (config.endpoint.starts_with(kScriptScheme)) {
    return std::make_unique<ScriptedJudgeTransport>(config.endpoint.substr(kScriptScheme.size()));
  }
  return std::make_unique<HttpJudgeTransport>(config);
}

std::string_view StatusName(JudgeResponse::Status status) {
  switch (status) {
    case JudgeResponse::Status::kOk: return "ok";
    case JudgeResponse::Status::kParseFailure: return "parse-failure";
    case JudgeResponse::Status::kTransportFailure: return "transport-failure";
  }
  return "?";
}

json RequestRecord(const JudgeConfig& config, const RenderedPrompt& prompt, std::string_view schema_id) {
  json j{{"judge_id", config.judge_id},
         {"model_name", config.model_name},
         {"temperature", config.temperature},
         {"metric_id", prompt.metric_id},
         {"schema", schema_id},
         {"system", prompt.system_text},
         {"user", prompt.user_text}};
  j["max_tokens"] = config.max_tokens ? json(*config.max_tokens) : json(nullptr);
  return j;
}

JudgeResponse QueryJudge(const JudgeConfig& config, JudgeTransport& transport, const RenderedPrompt& prompt,
                         const ResponseSchema& schema) {
  return RunAttempts(config, transport, prompt, schema, nullptr);
}

struct JudgeGateway::Slot {
  JudgeConfig config;
  std::unique_ptr<JudgeTransport> transport;
  std::counting_semaphore<kMaxConcurrentCap> permits;

  explicit Slot(JudgeConfig c) : config(std::move(c)), permits(config.max_concurrent) {}
};

JudgeGateway::JudgeGateway(std::vector<JudgeConfig> roster, Options options)
    : roster_(std::move(roster)), options_(std::move(options)) {
  for (const auto& c : roster_) {
    c.Validate();
    auto s = std::make_unique<Slot>(c);
    if (!slots_.emplace(c.judge_id, std::move(s)).second) {
      throw std::invalid_argument(fmt::format("duplicate judge id {}", c.judge_id));
    }
  }
}

JudgeGateway::~JudgeGateway() = default;

JudgeGateway::Slot& JudgeGateway::slot(const std::string& judge_id) {
  auto it = slots_.find(judge_id);
  if (it == slots_.end()) throw std::invalid_argument(fmt::format("unknown judge {}", judge_id));
  return *it->second;
}

void JudgeGateway::SetTransport(const std::string& judge_id, std::unique_ptr<JudgeTransport> transport) {
  slot(judge_id).transport = std::move(transport);
}

std::vector<std::string> JudgeGateway::judge_ids() const {
  std::vector<std::string> ids;
  for (const auto& c : roster_) ids.push_back(c.judge_id);
  return ids;
}

std::map<std::string, std::string> JudgeGateway::Preflight() {
  std::map<std::string, std::string> failures;
  for (const auto& c : roster_) {
    auto& s = slot(c.judge_id);
    try {
      if (!s.transport) s.transport = MakeTransport(s.config);
      std::string error;
      if (!s.transport->Reachable(&error)) failures[c.judge_id] = error;
    } catch (const std::exception& e) {
      failures[c.judge_id] = e.what();
    }
  }
  return failures;
}

JudgeResponse JudgeGateway::Query(const std::string& judge_id, const RenderedPrompt& prompt,
                                  const ResponseSchema& schema) {
  auto& s = slot(judge_id);
  const json request = RequestRecord(s.config, prompt, schema.id);
  const std::string id = Sha256Hex(request.dump());
  std::optional<std::filesystem::path> path;
  if (options_.transcript_dir) path = *options_.transcript_dir / (id + ".json");

  if (path && options_.reuse_transcripts && std::filesystem::exists(*path)) {
    std::ifstream in(*path);
    json stored = json::parse(in, nullptr, false);
    if (!stored.is_discarded() && stored.value("status", "") == "ok" && stored["request"] == request) {
      JudgeResponse r;
      r.status = JudgeResponse::Status::kOk;
      r.parsed = stored["parsed"];
      const auto& attempts = stored["attempts"];
      r.attempt_count = static_cast<int>(attempts.size());
      if (!attempts.empty()) r.raw_text = attempts.back().value("text", "");
      r.transcript_id = id;
      r.from_cache = true;
      return r;
    }
  }

  s.permits.acquire();
  JudgeResponse r;
  std::vector<json> attempts;
  try {
    if (!s.transport) s.transport = MakeTransport(s.config);
    r = RunAttempts(s.config, *s.transport, prompt, schema, &attempts);
  } catch (const std::exception& e) {
    r.status = JudgeResponse::Status::kTransportFailure;
    r.error = e.what();
  }
  s.permits.release();

  r.transcript_id = id;
  if (!r.ok()) spdlog::warn("judge {} {}: {} after {} attempt(s): {}", judge_id, prompt.metric_id,
                            StatusName(r.status), r.attempt_count, r.error);
  if (path) WriteAtomically(*path, ResponseToTranscript(request, r, attempts).dump(2) + "\n");
  return r;
}

double EnsembleMean(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("ensemble mean of an empty list");
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("ensemble mean of a non-finite score");
  }
  // Summing in sorted order keeps the result independent of input order.
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  return std::clamp(mean, sorted.front(), sorted.back());
}

}  // namespace deepeval
