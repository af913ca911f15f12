#include "deepeval/fetcher.h"

#include <netdb.h>

#include <fstream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "deepeval/hashing.h"
#include "deepeval/html_text.h"
#include "deepeval/url.h"

namespace deepeval {
namespace {

using json = nlohmann::json;

std::string NowIso() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now())));
}

bool Resolves(const std::string& host) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = getaddrinfo(host.c_str(), nullptr, &hints, &res);
  if (res) freeaddrinfo(res);
  return rc == 0;
}

// Target of a Location header relative to `base`.
std::optional<std::string> ResolveLocation(const UrlParts& base, const std::string& location) {
  if (location.find("://") != std::string::npos) return location;
  if (location.starts_with("//")) return base.scheme + ":" + location;
  if (location.starts_with("/")) return base.origin() + location;
  std::string dir = base.path.substr(0, base.path.rfind('/') + 1);
  return base.origin() + dir + location;
}

std::string PlainText(std::string_view body) {
  std::string out;
  std::size_t start = 0;
  while (start <= body.size()) {
    std::size_t end = body.find('\n', start);
    if (end == std::string_view::npos) end = body.size();
    std::string_view line = body.substr(start, end - start);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    if (!line.empty()) {
      if (!out.empty()) out += '\n';
      out += line;
    }
    start = end + 1;
  }
  return out;
}

class Permit {
 public:
  explicit Permit(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~Permit() { s_.release(); }
  Permit(const Permit&) = delete;
  Permit& operator=(const Permit&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

}  // namespace

std::string_view FetchStatusName(FetchStatus s) {
  switch (s) {
    case FetchStatus::kOk: return "ok";
    case FetchStatus::kHttpError: return "http-error";
    case FetchStatus::kTimeout: return "timeout";
    case FetchStatus::kDnsFailure: return "dns-failure";
    case FetchStatus::kTlsFailure: return "tls-failure";
    case FetchStatus::kConnectionFailure: return "connection-failure";
    case FetchStatus::kEmptyContent: return "empty-content";
  }
  return "?";
}

std::string FetchResult::status_label() const {
  if (status == FetchStatus::kHttpError) return fmt::format("http-error({})", http_code);
  return std::string(FetchStatusName(status));
}

json FetchResultToJson(const FetchResult& r) {
  return {{"requested_url", r.requested_url}, {"final_url", r.final_url},
          {"status", FetchStatusName(r.status)}, {"http_code", r.http_code},
          {"title", r.title},                   {"content_text", r.content_text},
          {"content_prefix", r.content_prefix}, {"fetched_at", r.fetched_at},
          {"error", r.error}};
}

FetchResult FetchResultFromJson(const json& j) {
  FetchResult r;
  r.requested_url = j.at("requested_url").get<std::string>();
  r.final_url = j.value("final_url", r.requested_url);
  const auto status = j.at("status").get<std::string>();
  bool known = false;
  for (auto s : {FetchStatus::kOk, FetchStatus::kHttpError, FetchStatus::kTimeout, FetchStatus::kDnsFailure,
                 FetchStatus::kTlsFailure, FetchStatus::kConnectionFailure, FetchStatus::kEmptyContent}) {
    if (FetchStatusName(s) == status) {
      r.status = s;
      known = true;
    }
  }
  if (!known) throw std::invalid_argument(fmt::format("unknown fetch status {}", status));
  r.http_code = j.value("http_code", 0);
  r.title = j.value("title", "");
  r.content_text = j.value("content_text", "");
  r.content_prefix = j.value("content_prefix", "");
  r.fetched_at = j.value("fetched_at", "");
  r.error = j.value("error", "");
  return r;
}

Fetcher::Fetcher(FetchPolicy policy) : policy_(std::move(policy)), global_(std::clamp(policy_.global_cap, 1, 1024)) {
  if (policy_.timeout.count() <= 0) throw std::invalid_argument("fetch timeout must be > 0");
  if (policy_.max_redirects < 0) throw std::invalid_argument("max_redirects must be >= 0");
}

Fetcher::~Fetcher() = default;

std::filesystem::path Fetcher::CachePath(const std::string& normalized_url) const {
  if (!policy_.cache_dir) return {};
  return *policy_.cache_dir / (Sha256Hex(normalized_url) + ".json");
}

FetchStats Fetcher::stats() const {
  std::lock_guard lock(mu_);
  return {inflight_.size(), cache_hits_, network_fetches_};
}

std::counting_semaphore<1024>& Fetcher::HostPermits(const std::string& host) {
  std::lock_guard lock(mu_);
  auto& slot = hosts_[host];
  if (!slot) slot = std::make_unique<std::counting_semaphore<1024>>(std::clamp(policy_.per_host_cap, 1, 1024));
  return *slot;
}

FetchResult Fetcher::Fetch(const std::string& url) {
  const std::string key = NormalizeUrl(url).value_or(url);
  std::promise<FetchResult> promise;
  {
    std::unique_lock lock(mu_);
    if (auto it = inflight_.find(key); it != inflight_.end()) {
      ++cache_hits_;
      auto shared = it->second;
      lock.unlock();
      return shared.get();
    }
    inflight_.emplace(key, promise.get_future().share());
  }

  try {
    const auto path = CachePath(key);
    if (!path.empty() && std::filesystem::exists(path)) {
      std::ifstream in(path);
      auto result = FetchResultFromJson(json::parse(in));
      {
        std::lock_guard lock(mu_);
        ++cache_hits_;
      }
      promise.set_value(result);
      return result;
    }
    if (policy_.offline) throw OfflineCacheMiss(fmt::format("cache required for {} in offline mode", key));
    auto result = Retrieve(key);
    if (!path.empty()) {
      std::filesystem::create_directories(path.parent_path());
      auto tmp = path;
      tmp += ".tmp";
      std::ofstream(tmp, std::ios::binary) << FetchResultToJson(result).dump(2) << "\n";
      std::filesystem::rename(tmp, path);
    }
    promise.set_value(result);
    return result;
  } catch (...) {
    promise.set_exception(std::current_exception());
    throw;
  }
}

FetchResult Fetcher::Retrieve(const std::string& url) {
  FetchResult r;
  r.requested_url = url;
  r.final_url = url;
  r.fetched_at = NowIso();
  {
    std::lock_guard lock(mu_);
    ++network_fetches_;
  }

  std::string current = url;
  for (int hop = 0; hop <= policy_.max_redirects; ++hop) {
    r.final_url = current;
    auto parts = ParseUrl(current);
    if (!parts || (parts->scheme != "http" && parts->scheme != "https")) {
      r.status = FetchStatus::kConnectionFailure;
      r.error = fmt::format("unsupported or malformed URL {}", current);
      return r;
    }
    if (!policy_.base_url_override && !Resolves(parts->host)) {
      r.status = FetchStatus::kDnsFailure;
      r.error = fmt::format("cannot resolve {}", parts->host);
      return r;
    }

    httplib::Headers headers{{"User-Agent", policy_.user_agent}, {"Accept", "text/html,text/plain;q=0.9,*/*;q=0.5"}};
    if (policy_.base_url_override) headers.emplace("Host", parts->authority());
    httplib::Client client(policy_.base_url_override.value_or(parts->origin()));
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(policy_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    client.set_follow_location(false);

    const auto start = std::chrono::steady_clock::now();
    httplib::Result res = [&] {
      Permit global(global_);
      Permit host(HostPermits(parts->host));
      return client.Get(parts->path_and_query(), headers);
    }();
    if (!res) {
      const auto err = res.error();
      const auto elapsed = std::chrono::steady_clock::now() - start;
      r.error = httplib::to_string(err);
      if (err == httplib::Error::ConnectionTimeout ||
          (err == httplib::Error::Read && elapsed + std::chrono::milliseconds(50) >= policy_.timeout)) {
        r.status = FetchStatus::kTimeout;
      } else if (err == httplib::Error::SSLConnection || err == httplib::Error::SSLServerVerification ||
                 err == httplib::Error::SSLLoadingCerts) {
        r.status = FetchStatus::kTlsFailure;
      } else {
        r.status = FetchStatus::kConnectionFailure;
      }
      return r;
    }
    r.http_code = res->status;
    if (res->status >= 300 && res->status < 400 && res->has_header("Location")) {
      auto next = ResolveLocation(*parts, res->get_header_value("Location"));
      current = NormalizeUrl(*next).value_or(*next);
      continue;
    }
    if (res->status >= 300) {
      r.status = FetchStatus::kHttpError;
      r.error = fmt::format("HTTP {}", res->status);
      return r;
    }
    const std::string type = res->get_header_value("Content-Type");
    const bool looks_html = type.find("html") != std::string::npos ||
                            (type.empty() && res->body.find('<') != std::string::npos);
    if (looks_html) {
      auto page = HtmlToText(res->body);
      r.title = std::move(page.title);
      r.content_text = std::move(page.text);
    } else if (type.starts_with("text/") || type.find("json") != std::string::npos ||
               type.find("xml") != std::string::npos || type.empty()) {
      r.content_text = PlainText(res->body);
    } else {
      r.error = fmt::format("unsupported content type {}", type);
    }
    if (r.content_text.empty()) {
      r.status = FetchStatus::kEmptyContent;
      if (r.error.empty()) r.error = "no readable text";
      return r;
    }
    r.status = FetchStatus::kOk;
    r.content_prefix = WordPrefix(r.content_text, policy_.prefix_words);
    return r;
  }
  r.status = FetchStatus::kHttpError;
  r.error = fmt::format("more than {} redirects", policy_.max_redirects);
  return r;
}

}  // namespace deepeval
