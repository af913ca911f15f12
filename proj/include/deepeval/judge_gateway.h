#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepeval/prompts.h"

namespace deepeval {

struct JudgeConfig {
  std::string judge_id;
  // http(s)://host[:port][/base] for an OpenAI-compatible chat-completions
  // service, or script:<path> for a scripted judge.
  std::string endpoint;
  std::string model_name;
  double temperature = 0;
  int max_retries = 2;
  std::chrono::milliseconds timeout{120'000};
  std::string api_key_env;  // name of the variable holding the bearer token
  std::optional<int> max_tokens;
  int max_concurrent = 4;
  std::chrono::milliseconds retry_backoff{500};

  /// Throws std::invalid_argument on a bad field.
  void Validate() const;
};

JudgeConfig JudgeConfigFromJson(const nlohmann::json& j);
nlohmann::json JudgeConfigToJson(const JudgeConfig& c);

struct TransportResult {
  bool ok = false;
  std::string text;   // completion text when ok
  std::string error;  // otherwise
};

class JudgeTransport {
 public:
  virtual ~JudgeTransport() = default;
  virtual TransportResult Complete(const RenderedPrompt& prompt) = 0;
  /// Cheap liveness probe used before a run starts.
  virtual bool Reachable(std::string* error) = 0;
};

/// Chooses the transport from the endpoint scheme.
std::unique_ptr<JudgeTransport> MakeTransport(const JudgeConfig& config);

/// A structured-output contract. `validate` returns an error message when
/// the object does not conform.
struct ResponseSchema {
  std::string id;
  std::function<std::optional<std::string>(const nlohmann::json&)> validate;
};

struct JudgeResponse {
  enum class Status { kOk, kParseFailure, kTransportFailure };

  Status status = Status::kTransportFailure;
  std::string raw_text;                 // last completion received
  std::optional<nlohmann::json> parsed; // set iff status == kOk
  int attempt_count = 0;
  std::chrono::milliseconds latency{0};
  std::string error;
  std::string transcript_id;            // SHA-256 of the request record
  bool from_cache = false;

  bool ok() const { return status == Status::kOk; }
};

std::string_view StatusName(JudgeResponse::Status status);

/// One judge call with up to max_retries + 1 attempts. Never throws for
/// transport or parse problems; they come back as failure markers.
JudgeResponse QueryJudge(const JudgeConfig& config, JudgeTransport& transport, const RenderedPrompt& prompt,
                         const ResponseSchema& schema);

/// The request part of a transcript. Its hash identifies the call.
nlohmann::json RequestRecord(const JudgeConfig& config, const RenderedPrompt& prompt, std::string_view schema_id);

/// Thread-safe access to a roster of judges with per-judge concurrency caps
/// and an audit directory of transcripts.
class JudgeGateway {
 public:
  struct Options {
    std::optional<std::filesystem::path> transcript_dir;
    bool reuse_transcripts = true;  // answer from a stored successful transcript
  };

  JudgeGateway(std::vector<JudgeConfig> roster, Options options);
  JudgeGateway(std::vector<JudgeConfig> roster) : JudgeGateway(std::move(roster), Options{}) {}
  ~JudgeGateway();

  /// Replaces the transport of one judge (tests and embedding).
  void SetTransport(const std::string& judge_id, std::unique_ptr<JudgeTransport> transport);

  JudgeResponse Query(const std::string& judge_id, const RenderedPrompt& prompt, const ResponseSchema& schema);

  /// judge_id -> error for every judge failing the liveness probe.
  std::map<std::string, std::string> Preflight();

  const std::vector<JudgeConfig>& roster() const { return roster_; }
  std::vector<std::string> judge_ids() const;

 private:
  struct Slot;
  Slot& slot(const std::string& judge_id);

  std::vector<JudgeConfig> roster_;
  Options options_;
  std::map<std::string, std::unique_ptr<Slot>, std::less<>> slots_;
};

/// Arithmetic mean. Throws std::invalid_argument for an empty list or a
/// non-finite value.
double EnsembleMean(std::span<const double> scores);

}  // namespace deepeval
