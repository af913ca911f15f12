#include "deepeval/fetcher.h"

#include <gtest/gtest.h>

#include <fstream>
#include <future>

#include "support/mock_web_server.h"

namespace deepeval {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("deepeval_fetch_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

FetchPolicy Policy(const testing::MockWebServer& server) {
  FetchPolicy p;
  p.base_url_override = server.base_url();
  p.timeout = std::chrono::seconds(5);
  return p;
}

TEST(Fetcher, OkPage) {
  testing::MockWebServer server;
  server.AddHtml("news.example.com/a", "Title", "<p>Body text here.</p>");
  Fetcher f(Policy(server));
  auto r = f.Fetch("https://News.Example.com/a#frag");
  EXPECT_EQ(r.status, FetchStatus::kOk);
  EXPECT_EQ(r.requested_url, "https://news.example.com/a");
  EXPECT_EQ(r.title, "Title");
  EXPECT_EQ(r.content_text, "Body text here.");
  EXPECT_TRUE(r.content_text.starts_with(r.content_prefix));
  EXPECT_FALSE(r.content_prefix.empty());
}

TEST(Fetcher, HttpErrors) {
  testing::MockWebServer server;
  server.Add("x.example.com/gone", {410, "gone"});
  Fetcher f(Policy(server));
  auto missing = f.Fetch("https://x.example.com/missing");
  EXPECT_EQ(missing.status, FetchStatus::kHttpError);
  EXPECT_EQ(missing.http_code, 404);
  EXPECT_EQ(missing.status_label(), "http-error(404)");
  EXPECT_TRUE(missing.content_text.empty());
  EXPECT_EQ(f.Fetch("https://x.example.com/gone").status_label(), "http-error(410)");
}

TEST(Fetcher, FollowsRedirectsAcrossHosts) {
  testing::MockWebServer server;
  server.Add("a.example.com/old", {301, "", "text/plain", "https://b.example.com/new"});
  server.Add("b.example.com/new", {302, "", "text/plain", "final?x=1"});
  server.AddHtml("b.example.com/final?x=1", "Final", "<p>Arrived</p>");
  Fetcher f(Policy(server));
  auto r = f.Fetch("https://a.example.com/old");
  EXPECT_EQ(r.status, FetchStatus::kOk);
  EXPECT_EQ(r.final_url, "https://b.example.com/final?x=1");
  EXPECT_EQ(r.content_text, "Arrived");
}

TEST(Fetcher, RedirectLimit) {
  testing::MockWebServer server;
  server.Add("loop.example.com/a", {302, "", "text/plain", "/b"});
  server.Add("loop.example.com/b", {302, "", "text/plain", "/a"});
  auto policy = Policy(server);
  policy.max_redirects = 3;
  Fetcher f(policy);
  auto r = f.Fetch("https://loop.example.com/a");
  EXPECT_EQ(r.status, FetchStatus::kHttpError);
  EXPECT_EQ(server.hits("loop.example.com/a") + server.hits("loop.example.com/b"), 4);
}

TEST(Fetcher, Timeout) {
  testing::MockWebServer server;
  server.Add("slow.example.com/", {200, "<p>late</p>", "text/html", "", std::chrono::milliseconds(1500)});
  auto policy = Policy(server);
  policy.timeout = std::chrono::milliseconds(300);
  Fetcher f(policy);
  EXPECT_EQ(f.Fetch("https://slow.example.com").status, FetchStatus::kTimeout);
}

TEST(Fetcher, BinaryContentIsNotReadable) {
  testing::MockWebServer server;
  server.Add("files.example.com/report.pdf", {200, "%PDF-1.7 ...", "application/pdf"});
  server.Add("files.example.com/blank", {200, "<html><body> </body></html>"});
  Fetcher f(Policy(server));
  EXPECT_EQ(f.Fetch("https://files.example.com/report.pdf").status, FetchStatus::kEmptyContent);
  EXPECT_EQ(f.Fetch("https://files.example.com/blank").status, FetchStatus::kEmptyContent);
}

TEST(Fetcher, ConnectionRefused) {
  FetchPolicy p;
  p.base_url_override = "http://127.0.0.1:1";
  p.timeout = std::chrono::seconds(2);
  Fetcher f(p);
  EXPECT_EQ(f.Fetch("https://x.example.com/").status, FetchStatus::kConnectionFailure);
}

TEST(Fetcher, UnresolvableHost) {
  FetchPolicy p;
  p.timeout = std::chrono::seconds(2);
  Fetcher f(p);
  EXPECT_EQ(f.Fetch("https://no-such-host.invalid/page").status, FetchStatus::kDnsFailure);
}

TEST(Fetcher, OneRetrievalPerUrlPerRun) {
  testing::MockWebServer server;
  server.AddHtml("news.example.com/a", "T", "<p>x</p>");
  Fetcher f(Policy(server));
  std::vector<std::future<FetchResult>> futures;
  for (int i = 0; i < 8; ++i) {
    futures.push_back(std::async(std::launch::async, [&f, i] {
      return f.Fetch(i % 2 ? "https://news.example.com/a" : "HTTPS://NEWS.EXAMPLE.COM/a#x");
    }));
  }
  for (auto& fu : futures) EXPECT_TRUE(fu.get().ok());
  EXPECT_EQ(server.hits("news.example.com/a"), 1);
  const auto stats = f.stats();
  EXPECT_EQ(stats.distinct_urls, 1u);
  EXPECT_EQ(stats.cache_hits, 7u);
  EXPECT_EQ(stats.network_fetches, 1u);
}

TEST(Fetcher, DiskCacheReplayAndOffline) {
  const auto dir = TempDir("cache");
  FetchResult first;
  {
    testing::MockWebServer server;
    server.AddHtml("news.example.com/a", "T", "<p>cached body</p>");
    auto policy = Policy(server);
    policy.cache_dir = dir;
    Fetcher f(policy);
    first = f.Fetch("https://news.example.com/a");
    EXPECT_TRUE(fs::exists(f.CachePath("https://news.example.com/a")));
  }
  FetchPolicy offline;
  offline.cache_dir = dir;
  offline.offline = true;
  Fetcher replay(offline);
  auto again = replay.Fetch("https://news.example.com/a");
  EXPECT_EQ(FetchResultToJson(again), FetchResultToJson(first));
  EXPECT_EQ(replay.stats().network_fetches, 0u);
  EXPECT_EQ(replay.stats().cache_hits, 1u);
  EXPECT_THROW(replay.Fetch("https://news.example.com/other"), OfflineCacheMiss);
}

TEST(Fetcher, PerHostCapRespected) {
  testing::MockWebServer server;
  for (int i = 0; i < 6; ++i) {
    server.Add("busy.example.com/" + std::to_string(i), {200, "<p>x</p>", "text/html", "", std::chrono::milliseconds(100)});
  }
  auto policy = Policy(server);
  policy.per_host_cap = 1;
  Fetcher f(policy);
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::future<FetchResult>> futures;
  for (int i = 0; i < 6; ++i) {
    futures.push_back(std::async(std::launch::async, [&f, i] { return f.Fetch("https://busy.example.com/" + std::to_string(i)); }));
  }
  for (auto& fu : futures) fu.get();
  EXPECT_GE(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(550));
}

}  // namespace
}  // namespace deepeval
