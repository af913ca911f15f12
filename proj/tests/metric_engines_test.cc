#include "deepeval/metric_engines.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "support/fake_judges.h"

namespace deepeval {
namespace {

using json = nlohmann::json;
using testing::FakeJudgeConfig;
using testing::FunctionTransport;
using testing::Reply;

ResolvedTask MakeTask(int checklist_items = 3) {
  BenchmarkTask t;
  t.id = "q1";
  t.query_template = "Analyze the launch market as of {{date}}.";
  for (int i = 1; i <= checklist_items; ++i) t.coverage_checklist.push_back({i, fmt::format("Item {}?", i)});
  return ResolveDate(t, ParseIsoDate("2025-06-01"));
}

std::string ChecklistReply(const std::vector<int>& ids, const std::function<bool(int)>& pass) {
  json evals = json::array();
  for (int id : ids) evals.push_back({{"item_id", id}, {"score", pass(id) ? 1 : 0}, {"justification", "j"}});
  return json{{"evaluations", evals}}.dump();
}

std::string IssuesReply(int n, std::optional<int> claimed = std::nullopt) {
  json issues = json::array();
  for (int i = 0; i < n; ++i) issues.push_back(fmt::format("issue {}", i));
  return json{{"specific_issues", issues}, {"total_issues", claimed.value_or(n)}, {"score", 5}, {"reasoning", "r"}}
      .dump();
}

struct TwoJudges {
  JudgeGateway gateway{{FakeJudgeConfig("ja"), FakeJudgeConfig("jb")}};
  void Set(const std::string& id, FunctionTransport::Fn fn) {
    gateway.SetTransport(id, std::make_unique<FunctionTransport>(std::move(fn)));
  }
};

std::vector<int> Ids(int n) {
  std::vector<int> v;
  for (int i = 1; i <= n; ++i) v.push_back(i);
  return v;
}

TEST(ChecklistMetric, EightAndNineOfTen) {
  TwoJudges j;
  j.Set("ja", [](const RenderedPrompt&) { return Reply(ChecklistReply(Ids(10), [](int id) { return id <= 8; })); });
  j.Set("jb", [](const RenderedPrompt&) { return Reply(ChecklistReply(Ids(10), [](int id) { return id != 4; })); });
  MetricEngines engines(j.gateway);
  auto m = engines.ScoreChecklistMetric(kMetricPresentation, MakeTask(), "report");
  ASSERT_TRUE(m.score);
  EXPECT_DOUBLE_EQ(*m.score, 85);
  EXPECT_TRUE(m.warnings.empty());
}

TEST(ChecklistMetric, AllPass) {
  TwoJudges j;
  for (const char* id : {"ja", "jb"}) {
    j.Set(id, [](const RenderedPrompt&) { return Reply(ChecklistReply(Ids(3), [](int) { return true; })); });
  }
  MetricEngines engines(j.gateway);
  EXPECT_EQ(engines.ScoreChecklistMetric(kMetricCoverage, MakeTask(3), "r").score, 100.0);
}

TEST(ChecklistMetric, CoveragePromptCarriesTaskChecklist) {
  TwoJudges j;
  std::string seen;
  for (const char* id : {"ja", "jb"}) {
    j.Set(id, [&seen](const RenderedPrompt& p) {
      seen = p.user_text;
      return Reply(ChecklistReply(Ids(3), [](int) { return true; }));
    });
  }
  MetricEngines engines(j.gateway);
  engines.ScoreChecklistMetric(kMetricCoverage, MakeTask(3), "the report body");
  EXPECT_NE(seen.find("Analyze the launch market as of June 1, 2025."), std::string::npos);
  EXPECT_NE(seen.find("1. Item 1?\n2. Item 2?\n3. Item 3?\n"), std::string::npos);
  EXPECT_NE(seen.find("the report body"), std::string::npos);
}

// Property: score = 100 * mean over items of the per-item judge pass mean,
// independent of the order items are presented or answered in.
TEST(ChecklistMetric, MeanOfPerItemPassMeans) {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    std::map<std::string, std::vector<bool>> passes;
    for (const char* id : {"ja", "jb"}) {
      for (int i = 0; i < n; ++i) passes[id].push_back(std::bernoulli_distribution(0.6)(rng));
    }
    double expected = 0;
    for (int i = 0; i < n; ++i) expected += (passes["ja"][i] + passes["jb"][i]) / 2.0;
    expected = 100.0 * expected / n;

    auto task = MakeTask(n);
    std::shuffle(task.task.coverage_checklist.begin(), task.task.coverage_checklist.end(), rng);
    TwoJudges j;
    for (const char* id : {"ja", "jb"}) {
      auto order = Ids(n);
      std::shuffle(order.begin(), order.end(), rng);
      auto row = passes[id];
      j.Set(id, [order, row](const RenderedPrompt&) {
        return Reply(ChecklistReply(order, [&row](int item) { return row[item - 1]; }));
      });
    }
    MetricEngines engines(j.gateway);
    auto m = engines.ScoreChecklistMetric(kMetricCoverage, task, "r");
    ASSERT_TRUE(m.score);
    EXPECT_NEAR(*m.score, expected, 1e-9);
    EXPECT_GE(*m.score, 0);
    EXPECT_LE(*m.score, 100);
  }
}

TEST(ChecklistMetric, IncompleteVerdictListIsAParseFailure) {
  TwoJudges j;
  j.Set("ja", [](const RenderedPrompt&) { return Reply(ChecklistReply({1, 2}, [](int) { return true; })); });
  j.Set("jb", [](const RenderedPrompt&) { return Reply(ChecklistReply(Ids(3), [](int id) { return id == 1; })); });
  MetricEngines engines(j.gateway);
  auto m = engines.ScoreChecklistMetric(kMetricCoverage, MakeTask(3), "r");
  ASSERT_TRUE(m.score);
  EXPECT_NEAR(*m.score, 100.0 / 3, 1e-9);
  EXPECT_FALSE(m.judges[0].score);
  EXPECT_FALSE(m.warnings.empty());
}

TEST(ChecklistMetric, AllJudgesFailMeansUnavailable) {
  TwoJudges j;
  for (const char* id : {"ja", "jb"}) j.Set(id, [](const RenderedPrompt&) { return testing::Fail(); });
  MetricEngines engines(j.gateway);
  auto m = engines.ScoreChecklistMetric(kMetricPresentation, MakeTask(), "r");
  EXPECT_FALSE(m.score);
  EXPECT_FALSE(m.warnings.empty());
}

TEST(MapIssueCountToScore, TableExamples) {
  const auto t = RubricBandTable::DefaultConsistency();
  EXPECT_EQ(MapIssueCountToScore(0, t), 100);
  EXPECT_EQ(MapIssueCountToScore(6, t), 70);
  EXPECT_EQ(MapIssueCountToScore(25, t), 10);
}

TEST(PointwiseMetric, ThreeAndFiveIssues) {
  TwoJudges j;
  j.Set("ja", [](const RenderedPrompt&) { return Reply(IssuesReply(3)); });
  j.Set("jb", [](const RenderedPrompt&) { return Reply(IssuesReply(5)); });
  MetricEngines engines(j.gateway);
  auto m = engines.ScorePointwiseMetric(kMetricConsistency, MakeTask(), "r");
  EXPECT_EQ(m.score, 75.0);
  EXPECT_EQ(m.judges[0].detail["judge_reported_score"], 5.0);
}

TEST(PointwiseMetric, ZeroIssues) {
  TwoJudges j;
  for (const char* id : {"ja", "jb"}) j.Set(id, [](const RenderedPrompt&) { return Reply(IssuesReply(0)); });
  MetricEngines engines(j.gateway);
  EXPECT_EQ(engines.ScorePointwiseMetric(kMetricAssociation, MakeTask(), "r").score, 100.0);
}

TEST(PointwiseMetric, MismatchedTotalRepairedToListLength) {
  TwoJudges j;
  j.Set("ja", [](const RenderedPrompt&) { return Reply(IssuesReply(2, 9)); });
  j.Set("jb", [](const RenderedPrompt&) { return Reply(IssuesReply(2)); });
  MetricEngines engines(j.gateway);
  auto m = engines.ScorePointwiseMetric(kMetricAssociation, MakeTask(), "r");
  EXPECT_EQ(m.score, 90.0);
  EXPECT_EQ(m.judges[0].detail["total_issues"], 2);
  ASSERT_EQ(m.warnings.size(), 1u);
  EXPECT_NE(m.warnings[0].find("total_issues"), std::string::npos);
}

TEST(PointwiseMetric, OneJudgeDownDegrades) {
  TwoJudges j;
  j.Set("ja", [](const RenderedPrompt&) { return testing::Fail(); });
  j.Set("jb", [](const RenderedPrompt&) { return Reply(IssuesReply(7)); });
  MetricEngines engines(j.gateway);
  auto m = engines.ScorePointwiseMetric(kMetricConsistency, MakeTask(), "r");
  EXPECT_EQ(m.score, 60.0);
  EXPECT_FALSE(m.warnings.empty());
}

TEST(PointwiseMetric, CustomRubric) {
  TwoJudges j;
  for (const char* id : {"ja", "jb"}) j.Set(id, [](const RenderedPrompt&) { return Reply(IssuesReply(1)); });
  MetricEngineOptions opts;
  opts.consistency_rubric = RubricBandTable({{0, 100, "none"}, {std::nullopt, 0, "any"}});
  MetricEngines engines(j.gateway, opts);
  EXPECT_EQ(engines.ScorePointwiseMetric(kMetricConsistency, MakeTask(), "r").score, 0.0);
}

json Card(double v) {
  return {{"granularity", v}, {"insight", v}, {"critique", v}, {"evidence", v}, {"density", v}, {"total", 5 * v}};
}

// Scores each presented report by its length, plus a bias toward whichever
// report is shown first.
FunctionTransport::Fn LengthJudge(double first_bias) {
  return [first_bias](const RenderedPrompt& p) {
    const auto a = testing::Between(p.user_text, "REPORT A:\n", "\n\nREPORT B:\n");
    const auto b = testing::Between(p.user_text, "REPORT B:\n", "");
    auto dim = [](std::size_t len, double bias) { return std::min(5.0, std::floor(len / 20.0) * 0.5 + bias); };
    return Reply(json{{"winner", "A"}, {"scores", {{"A", Card(dim(a.size(), first_bias))}, {"B", Card(dim(b.size(), 0))}}}}
                     .dump());
  };
}

TEST(DecideVerdict, Threshold) {
  EXPECT_EQ(DecideVerdict(20.0, 18.5), PairVerdict::kA);
  EXPECT_EQ(DecideVerdict(20.0, 19.5), PairVerdict::kTie);
  EXPECT_EQ(DecideVerdict(19.0, 20.0), PairVerdict::kTie);
  EXPECT_EQ(DecideVerdict(18.9, 20.0), PairVerdict::kB);
}

TEST(DepthPair, PositionBiasCancelsUnderSwap) {
  TwoJudges j;
  j.Set("ja", LengthJudge(1.0));
  j.Set("jb", LengthJudge(1.0));
  MetricEngines engines(j.gateway);
  const std::string same(100, 'x');
  auto out = engines.ScoreDepthPair(MakeTask(), same, same);
  ASSERT_TRUE(out);
  EXPECT_EQ(out->calls.size(), 4u);
  EXPECT_DOUBLE_EQ(out->total_a, out->total_b);
  EXPECT_EQ(out->verdict, PairVerdict::kTie);
}

TEST(DepthPair, TotalsAveragedOverJudgesAndOrders) {
  TwoJudges j;
  // Judge a: presented A gets 4s, B gets 3s. Judge b: always 2s.
  j.Set("ja", [](const RenderedPrompt&) { return Reply(json{{"scores", {{"A", Card(4)}, {"B", Card(3)}}}}.dump()); });
  j.Set("jb", [](const RenderedPrompt&) { return Reply(json{{"scores", {{"A", Card(2)}, {"B", Card(2)}}}}.dump()); });
  MetricEngines engines(j.gateway);
  auto out = engines.ScoreDepthPair(MakeTask(), "a", "b");
  ASSERT_TRUE(out);
  // Report a: 20 (ja, first), 15 (ja, swapped), 10, 10 -> 13.75; same for b.
  EXPECT_DOUBLE_EQ(out->total_a, 13.75);
  EXPECT_DOUBLE_EQ(out->total_b, 13.75);
}

TEST(DepthPair, JudgeTotalIgnoredInFavourOfDimensionSum) {
  TwoJudges j;
  for (const char* id : {"ja", "jb"}) {
    j.Set(id, [](const RenderedPrompt&) {
      auto a = Card(5);
      a["total"] = 3;
      return Reply(json{{"scores", {{"A", a}, {"B", Card(1)}}}}.dump());
    });
  }
  MetricEngines engines(j.gateway);
  auto out = engines.ScoreDepthPair(MakeTask(), "a", "b");
  ASSERT_TRUE(out);
  EXPECT_DOUBLE_EQ(out->total_a, 15);  // (25 + 5) / 2 over the two orders
}

TEST(DepthPair, OutOfRangeDimensionRejected) {
  TwoJudges j;
  for (const char* id : {"ja", "jb"}) {
    j.Set(id, [](const RenderedPrompt&) { return Reply(json{{"scores", {{"A", Card(6)}, {"B", Card(1)}}}}.dump()); });
  }
  MetricEngines engines(j.gateway);
  EXPECT_FALSE(engines.ScoreDepthPair(MakeTask(), "a", "b"));
}

TEST(DepthPair, FailedCallExcluded) {
  TwoJudges j;
  j.Set("ja", LengthJudge(0));
  j.Set("jb", [](const RenderedPrompt&) { return testing::Fail(); });
  MetricEngines engines(j.gateway);
  auto out = engines.ScoreDepthPair(MakeTask(), std::string(200, 'a'), std::string(20, 'b'));
  ASSERT_TRUE(out);
  EXPECT_EQ(out->warnings.size(), 2u);
  EXPECT_DOUBLE_EQ(out->total_a, 25);
  EXPECT_DOUBLE_EQ(out->total_b, 2.5);
  EXPECT_EQ(out->verdict, PairVerdict::kA);
}

TEST(DepthPair, SwapSymmetry) {
  std::mt19937 rng(41);
  for (int i = 0; i < 25; ++i) {
    TwoJudges j;
    j.Set("ja", LengthJudge(std::uniform_int_distribution<int>(0, 2)(rng) * 0.5));
    j.Set("jb", LengthJudge(0));
    MetricEngines engines(j.gateway);
    const std::string a(std::uniform_int_distribution<int>(0, 200)(rng), 'a');
    const std::string b(std::uniform_int_distribution<int>(0, 200)(rng), 'b');
    auto ab = engines.ScoreDepthPair(MakeTask(), a, b);
    auto ba = engines.ScoreDepthPair(MakeTask(), b, a);
    ASSERT_TRUE(ab && ba);
    EXPECT_EQ(ab->total_a, ba->total_b);
    EXPECT_EQ(ab->total_b, ba->total_a);
    const PairVerdict mirrored =
        ab->verdict == PairVerdict::kA ? PairVerdict::kB : ab->verdict == PairVerdict::kB ? PairVerdict::kA : PairVerdict::kTie;
    EXPECT_EQ(ba->verdict, mirrored);
    for (double t : {ab->total_a, ab->total_b}) {
      EXPECT_GE(t, 0);
      EXPECT_LE(t, 25);
    }
  }
}

TEST(WinRate, Examples) {
  using V = PairVerdict;
  std::vector<V> mixed{V::kA, V::kA, V::kA, V::kA, V::kB, V::kB, V::kTie, V::kTie, V::kTie, V::kTie};
  EXPECT_NEAR(*WinRate(mixed), 4.0 / 6, 1e-12);
  EXPECT_FALSE(WinRate({V::kTie, V::kTie}));
  EXPECT_FALSE(WinRate({}));
  EXPECT_EQ(WinRate(std::vector<V>(10, V::kA)), 1.0);
}

TEST(WinRate, SystemAndBaselineSumToOne) {
  std::mt19937 rng(43);
  for (int i = 0; i < 200; ++i) {
    std::vector<PairVerdict> v(std::uniform_int_distribution<int>(0, 15)(rng));
    for (auto& x : v) x = static_cast<PairVerdict>(std::uniform_int_distribution<int>(0, 2)(rng));
    auto a = WinRate(v, PairVerdict::kA);
    auto b = WinRate(v, PairVerdict::kB);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) EXPECT_NEAR(*a + *b, 1.0, 1e-12);
  }
}

TEST(Serialization, RoundTrip) {
  TwoJudges j;
  j.Set("ja", LengthJudge(0.5));
  j.Set("jb", [](const RenderedPrompt&) { return testing::Fail(); });
  MetricEngines engines(j.gateway);
  auto pair = engines.ScoreDepthPair(MakeTask(), "aaaa", "bbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbb");
  ASSERT_TRUE(pair);
  EXPECT_EQ(PairOutcomeToJson(PairOutcomeFromJson(PairOutcomeToJson(*pair))), PairOutcomeToJson(*pair));
  j.Set("jb", [](const RenderedPrompt&) { return Reply(IssuesReply(4)); });
  j.Set("ja", [](const RenderedPrompt&) { return testing::Fail(); });
  auto m = engines.ScorePointwiseMetric(kMetricConsistency, MakeTask(), "r");
  EXPECT_EQ(MetricScoreToJson(MetricScoreFromJson(MetricScoreToJson(m))), MetricScoreToJson(m));
}

}  // namespace
}  // namespace deepeval
