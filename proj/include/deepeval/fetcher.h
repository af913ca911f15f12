#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace deepeval {

enum class FetchStatus {
  kOk,
  kHttpError,
  kTimeout,
  kDnsFailure,
  kTlsFailure,
  kConnectionFailure,
  kEmptyContent,  // reachable, but no readable text (binary, PDF, empty page)
};

std::string_view FetchStatusName(FetchStatus s);

struct FetchResult {
  std::string requested_url;  // normalized
  std::string final_url;      // after redirects
  FetchStatus status = FetchStatus::kConnectionFailure;
  int http_code = 0;
  std::string title;
  std::string content_text;    // nonempty iff status == kOk
  std::string content_prefix;  // prefix of content_text
  std::string fetched_at;      // UTC, ISO 8601
  std::string error;

  bool ok() const { return status == FetchStatus::kOk; }
  /// "ok", "http-error(404)", "timeout", ...
  std::string status_label() const;
};

nlohmann::json FetchResultToJson(const FetchResult& r);
FetchResult FetchResultFromJson(const nlohmann::json& j);

struct FetchPolicy {
  std::chrono::milliseconds timeout{30'000};
  int max_redirects = 10;
  std::size_t prefix_words = 500;
  std::optional<std::filesystem::path> cache_dir;
  std::string user_agent = "deepeval-citation-check/1.0";
  int global_cap = 8;
  int per_host_cap = 2;
  bool offline = false;  // cache misses are errors
  // Sends every request to this origin instead, with the original Host
  // header. Used for local fixtures; not part of the cache key.
  std::optional<std::string> base_url_override;
};

class OfflineCacheMiss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FetchStats {
  std::size_t distinct_urls = 0;
  std::size_t cache_hits = 0;
  std::size_t network_fetches = 0;
};

/// Fetches pages with an in-run memo, an on-disk cache keyed by normalized
/// URL, and global plus per-host concurrency caps. Concurrent requests for
/// the same URL share one retrieval. Network problems are reported in the
/// result status; only an offline cache miss throws.
class Fetcher {
 public:
  explicit Fetcher(FetchPolicy policy);
  ~Fetcher();

  FetchResult Fetch(const std::string& url);
  FetchStats stats() const;
  const FetchPolicy& policy() const { return policy_; }

  /// Cache file for a normalized URL.
  std::filesystem::path CachePath(const std::string& normalized_url) const;

 private:
  FetchResult Retrieve(const std::string& url);
  std::counting_semaphore<1024>& HostPermits(const std::string& host);

  FetchPolicy policy_;
  std::counting_semaphore<1024> global_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_future<FetchResult>> inflight_;
  std::map<std::string, std::unique_ptr<std::counting_semaphore<1024>>> hosts_;
  std::size_t cache_hits_ = 0;
  std::size_t network_fetches_ = 0;
};

}  // namespace deepeval
