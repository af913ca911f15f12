#include "deepeval/citation_verifier.h"

#include <gtest/gtest.h>

#include <random>

#include <fmt/format.h>

#include "support/citation_fixture.h"

namespace deepeval {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using testing::FakeJudgeConfig;
using testing::FunctionTransport;

ResolvedTask Task() {
  BenchmarkTask t;
  t.id = "launch";
  t.query_template = "Analyze the medium-lift launch vehicle market.";
  t.coverage_checklist = {{1, "Does it give market share?"}};
  return ResolveDate(t, ParseIsoDate("2025-01-01"));
}

struct Rig {
  testing::MockWebServer web;
  JudgeGateway gateway{{FakeJudgeConfig("ja"), FakeJudgeConfig("jb")}};
  std::unique_ptr<Fetcher> fetcher;
  int judge_calls = 0;

  explicit Rig(std::optional<fs::path> cache = std::nullopt) {
    FetchPolicy p;
    p.base_url_override = web.base_url();
    p.timeout = std::chrono::seconds(5);
    p.cache_dir = cache;
    fetcher = std::make_unique<Fetcher>(p);
    SetJudge("ja", testing::FactJudge);
    SetJudge("jb", testing::FactJudge);
  }
  void SetJudge(const std::string& id, FunctionTransport::Fn fn) {
    gateway.SetTransport(id, std::make_unique<FunctionTransport>(std::move(fn)));
  }
  CitationAuditSummary Audit(const std::string& report, VerifierOptions opts = {}) {
    CitationVerifier v(gateway, *fetcher, opts);
    return v.Audit(Task(), ParseReport(report));
  }
};

ClaimCitations Pair(const std::string& text, std::vector<std::string> urls) {
  return {ClaimUnit{{0, 0}, text, {}, false}, std::move(urls), {}};
}

TEST(GroupClaimsByUrl, Examples) {
  EXPECT_TRUE(GroupClaimsByUrl({}).empty());
  auto one = GroupClaimsByUrl({Pair("a", {"u"}), Pair("b", {"u"}), Pair("c", {"u"})});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].claims.size(), 3u);
  auto two = GroupClaimsByUrl({Pair("a", {"u1", "u2"}), Pair("b", {"u2"})});
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].url, "u1");
  EXPECT_EQ(two[0].claims.size(), 1u);
  EXPECT_EQ(two[1].claims.size(), 2u);
}

TEST(IsAccessible, OnlyOk) {
  FetchResult r;
  r.status = FetchStatus::kOk;
  EXPECT_TRUE(IsAccessible(r));
  for (auto s : {FetchStatus::kHttpError, FetchStatus::kTimeout, FetchStatus::kDnsFailure, FetchStatus::kTlsFailure,
                 FetchStatus::kConnectionFailure, FetchStatus::kEmptyContent}) {
    r.status = s;
    EXPECT_FALSE(IsAccessible(r));
  }
}

TEST(CitationVerifier, PlantedFixture) {
  Rig rig;
  testing::AddCitationFixturePages(rig.web);
  auto s = rig.Audit(testing::CitationFixtureReport());
  const auto want = testing::CitationFixtureManifest();
  EXPECT_EQ(s.e1, want.e1);
  EXPECT_EQ(s.e2, want.e2);
  EXPECT_EQ(s.e3, want.e3);
  EXPECT_EQ(s.total(), want.e1 + want.e2 + want.e3);
  EXPECT_EQ(s.distinct_urls, want.distinct_urls);
  EXPECT_EQ(rig.web.total_hits(), 6);

  // The reuse page backs four claims and rejects one of them, plus the shared 40% claim.
  std::vector<std::string> e3_claims;
  for (const auto& e : s.errors) {
    if (e.kind == CitationErrorKind::kE3) e3_claims.push_back(e.url + " " + *e.claim);
    if (e.kind != CitationErrorKind::kE3) EXPECT_FALSE(e.claim);
  }
  std::sort(e3_claims.begin(), e3_claims.end());
  EXPECT_EQ(e3_claims, (std::vector<std::string>{
                           "https://reuse.example.com/costs Blue Origin flew 7 missions [2].",
                           "https://reuse.example.com/costs Launch prices fell 40% over the decade [2][6].",
                           "https://stats.example.com/market Launch prices fell 40% over the decade [2][6].",
                       }));
}

TEST(CitationVerifier, AllLinksDead) {
  Rig rig;
  auto s = rig.Audit("A [1]. B [2]. C [1].\n\n## References\n[1] https://x.example.com/a\n[2] https://y.example.com/b\n");
  EXPECT_EQ(s.e1, 2);
  EXPECT_EQ(s.e2, 0);
  EXPECT_EQ(s.e3, 0);
  EXPECT_EQ(s.errors[0].evidence, "http-error(404)");
}

TEST(CitationVerifier, NoCitations) {
  Rig rig;
  auto s = rig.Audit("# Plain\n\nNo sources here.\n");
  EXPECT_EQ(s.total(), 0);
  EXPECT_EQ(s.distinct_urls, 0u);
  EXPECT_TRUE(s.errors.empty());
}

TEST(CitationVerifier, UnresolvedNumberIsE1) {
  Rig rig;
  auto s = rig.Audit("Claim [7]. Another [7]. Third [8].\n\n## References\n[1] https://x.example.com/a\n");
  EXPECT_EQ(s.e1, 2);
  EXPECT_EQ(s.errors[0].url, "[7]");
}

TEST(CitationVerifier, RelevanceFailureFailsOpen) {
  Rig rig;
  testing::AddCitationFixturePages(rig.web);
  auto no_relevance = [](const RenderedPrompt& p) {
    return p.metric_id == "relevance" ? testing::Fail() : testing::FactJudge(p);
  };
  rig.SetJudge("ja", no_relevance);
  rig.SetJudge("jb", no_relevance);
  auto s = rig.Audit(testing::CitationFixtureReport());
  EXPECT_EQ(s.e2, 0);
  // The healthcare page now reaches the support check; "12%" is absent, "rising" has no figure.
  EXPECT_EQ(s.e3, 4);
  EXPECT_FALSE(s.warnings.empty());
}

TEST(CitationVerifier, SupportFailureExcludesClaims) {
  Rig rig;
  testing::AddCitationFixturePages(rig.web);
  auto no_support = [](const RenderedPrompt& p) {
    return p.metric_id == "support" ? testing::Fail() : testing::FactJudge(p);
  };
  rig.SetJudge("ja", no_support);
  rig.SetJudge("jb", no_support);
  auto s = rig.Audit(testing::CitationFixtureReport());
  EXPECT_EQ(s.e3, 0);
  EXPECT_EQ(s.unknown_claims, 1u + 5u + 2u);  // share, reuse, stats groups
  EXPECT_EQ(s.checked_pairs, 0u);
}

TEST(CitationVerifier, FallsBackToSecondJudge) {
  Rig rig;
  testing::AddCitationFixturePages(rig.web);
  rig.SetJudge("ja", [](const RenderedPrompt&) { return testing::Fail(); });
  auto s = rig.Audit(testing::CitationFixtureReport());
  EXPECT_EQ(s.e3, 3);
  EXPECT_TRUE(s.warnings.empty());
}

TEST(CitationVerifier, PaywallSwitch) {
  Rig rig;
  rig.web.Add("paid.example.com/a", {403, "subscribe"});
  const std::string report = "Claim [1].\n\n## References\n[1] https://paid.example.com/a\n";
  EXPECT_EQ(rig.Audit(report).e1, 1);
  auto s = rig.Audit(report, {true});
  EXPECT_EQ(s.e1, 0);
  EXPECT_EQ(s.unverifiable_urls, 1u);
}

TEST(CitationVerifier, ReplayFromCacheIsByteIdentical) {
  const auto dir = fs::temp_directory_path() / fmt::format("deepeval_verify_replay_{}", ::getpid());
  fs::remove_all(dir);
  std::string first;
  {
    Rig rig(dir);
    testing::AddCitationFixturePages(rig.web);
    first = CitationAuditToJson(rig.Audit(testing::CitationFixtureReport())).dump();
  }
  Rig replay(dir);  // serves nothing; the cache must answer
  auto s = replay.Audit(testing::CitationFixtureReport());
  EXPECT_EQ(CitationAuditToJson(s).dump(), first);
  EXPECT_EQ(replay.web.total_hits(), 0);
  EXPECT_EQ(CitationAuditToJson(CitationAuditFromJson(CitationAuditToJson(s))).dump(), first);
}

// Property: random reports over a random web respect the tree invariants.
TEST(CitationVerifier, TreeInvariants) {
  std::mt19937 rng(51);
  for (int trial = 0; trial < 15; ++trial) {
    Rig rig;
    const int sites = std::uniform_int_distribution<int>(1, 6)(rng);
    std::string refs = "## References\n";
    for (int i = 1; i <= sites; ++i) {
      const std::string host = fmt::format("site{}.example.com/p", i);
      switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
        case 0: rig.web.Add(host, {500, "x"}); break;
        case 1: rig.web.AddHtml(host, "Healthy living", "<p>figure 10</p>"); break;
        default: rig.web.AddHtml(host, "Launch data", fmt::format("<p>figure {} and {}</p>", i, i * 10)); break;
      }
      refs += fmt::format("[{}] https://{}\n", i, host);
    }
    std::string body;
    const int claims = std::uniform_int_distribution<int>(0, 12)(rng);
    int pairs_upper = 0;
    for (int c = 0; c < claims; ++c) {
      const int a = std::uniform_int_distribution<int>(1, sites + 1)(rng);  // sites + 1 is unresolved
      const int b = std::uniform_int_distribution<int>(1, sites)(rng);
      body += fmt::format("Claim {} reports figure {} [{}][{}].\n\n", c, std::uniform_int_distribution<int>(1, 60)(rng), a, b);
      pairs_upper += a == b ? 1 : 2;
    }
    auto s = rig.Audit(body + refs);
    std::set<std::string> e1e2_urls;
    std::set<std::string> e3_urls;
    int unresolved = 0;
    for (const auto& e : s.errors) {
      if (e.kind == CitationErrorKind::kE3) {
        e3_urls.insert(e.url);
      } else {
        EXPECT_TRUE(e1e2_urls.insert(e.url).second) << "URL counted twice in E1/E2: " << e.url;
        if (e.url.starts_with("[")) ++unresolved;
      }
    }
    for (const auto& u : e3_urls) EXPECT_FALSE(e1e2_urls.count(u));
    EXPECT_LE(s.e1 + s.e2 - unresolved, static_cast<int>(s.distinct_urls));
    EXPECT_LE(s.e3, static_cast<int>(s.checked_pairs));
    EXPECT_LE(static_cast<int>(s.checked_pairs), pairs_upper);
    EXPECT_LE(static_cast<std::size_t>(rig.web.total_hits()), s.distinct_urls);
    EXPECT_EQ(s.total(), static_cast<int>(s.errors.size()));
  }
}

}  // namespace
}  // namespace deepeval
