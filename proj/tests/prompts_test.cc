#include "deepeval/prompts.h"

#include <gtest/gtest.h>

#include <random>
#include <regex>

namespace deepeval {
namespace {

std::vector<PromptTemplate> AllTemplates() {
  const auto c = RubricBandTable::DefaultConsistency();
  const auto a = RubricBandTable::DefaultAssociation();
  return {PresentationTemplate(), ConsistencyTemplate(c), CoverageTemplate(), DepthTemplate(),
          AssociationTemplate(a), RelevanceTemplate(),    SupportTemplate()};
}

PromptBindings BindAll(const PromptTemplate& t, const std::string& value) {
  PromptBindings b;
  for (const auto& name : Placeholders(t)) b[name] = value + "<" + name + ">";
  return b;
}

TEST(Placeholders, PerTemplate) {
  using S = std::set<std::string>;
  EXPECT_EQ(Placeholders(PresentationTemplate()), (S{"query", "checklist_section", "report_content"}));
  EXPECT_EQ(Placeholders(CoverageTemplate()), (S{"query", "checklist_section", "report_content"}));
  EXPECT_EQ(Placeholders(ConsistencyTemplate(RubricBandTable::DefaultConsistency())), (S{"task", "report"}));
  EXPECT_EQ(Placeholders(AssociationTemplate(RubricBandTable::DefaultAssociation())), (S{"task", "report"}));
  EXPECT_EQ(Placeholders(DepthTemplate()), (S{"query", "report_a_content", "report_b_content"}));
  EXPECT_EQ(Placeholders(RelevanceTemplate()), (S{"task", "url", "title", "page_prefix", "claims"}));
  EXPECT_EQ(Placeholders(SupportTemplate()), (S{"url", "page_content", "claims"}));
}

TEST(Placeholders, EachAppearsExactlyOnce) {
  for (const auto& t : AllTemplates()) {
    const std::string all = t.system_text + "\n" + t.user_text;
    for (const auto& name : Placeholders(t)) {
      const std::string token = "{" + name + "}";
      std::size_t count = 0;
      for (auto p = all.find(token); p != std::string::npos; p = all.find(token, p + 1)) ++count;
      EXPECT_EQ(count, 1u) << t.metric_id << " " << token;
    }
  }
}

TEST(RenderPrompt, CoverageFullyBound) {
  PromptBindings b{{"query", "What is X?"}, {"checklist_section", "1. Q?\n"}, {"report_content", "Body"}};
  auto r = RenderPrompt(CoverageTemplate(), b);
  EXPECT_EQ(r.metric_id, "coverage");
  EXPECT_NE(r.system_text.find("No Credit for Placeholders"), std::string::npos);
  EXPECT_EQ(r.user_text,
            "ORIGINAL RESEARCH QUERY:\nWhat is X?\n\nCHECKLIST ITEMS TO EVALUATE:\n1. Q?\n\n\n"
            "RESEARCH REPORT TO EVALUATE:\nBody\n");
}

TEST(RenderPrompt, NoPlaceholdersIsIdentity) {
  PromptTemplate t{"m", "plain system {NotOne} {}", "user text with JSON {\"a\": 1}"};
  auto r = RenderPrompt(t, {});
  EXPECT_EQ(r.system_text, t.system_text);
  EXPECT_EQ(r.user_text, t.user_text);
}

TEST(RenderPrompt, MissingBindingNamed) {
  PromptBindings b{{"task", "t"}};
  try {
    RenderPrompt(ConsistencyTemplate(RubricBandTable::DefaultConsistency()), b);
    FAIL() << "expected RenderError";
  } catch (const RenderError& e) {
    EXPECT_STREQ(e.what(), "unbound placeholder: report");
  }
}

TEST(RenderPrompt, ValuesAreNotRescanned) {
  PromptTemplate t{"m", "", "{report} and {task}"};
  auto r = RenderPrompt(t, {{"report", "{task}"}, {"task", "T"}});
  EXPECT_EQ(r.user_text, "{task} and T");
}

// Property: random values, including placeholder-like text, leave no
// template placeholder unsubstituted outside the bound values.
TEST(RenderPrompt, NoResidualPlaceholders) {
  std::mt19937 rng(11);
  const std::string alphabet = "abc {}_xyz\n\"";
  for (const auto& t : AllTemplates()) {
    for (int i = 0; i < 20; ++i) {
      std::string value;
      const int len = std::uniform_int_distribution<int>(0, 30)(rng);
      for (int k = 0; k < len; ++k) value += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
      // Remove placeholder syntax from values so residue can only come from the template.
      value = std::regex_replace(value, std::regex(R"(\{[a-z_]+\})"), "");
      auto r = RenderPrompt(t, BindAll(t, value));
      for (const auto& name : Placeholders(t)) {
        EXPECT_EQ((r.system_text + r.user_text).find("{" + name + "}"), std::string::npos);
      }
    }
  }
}

TEST(Templates, AnchorPhrases) {
  EXPECT_NE(PresentationTemplate().system_text.find("Strict Binary Assessment"), std::string::npos);
  EXPECT_NE(ConsistencyTemplate(RubricBandTable::DefaultConsistency()).system_text.find("must match the length"),
            std::string::npos);
  EXPECT_NE(CoverageTemplate().system_text.find("No Credit for Placeholders"), std::string::npos);
  EXPECT_NE(DepthTemplate().system_text.find("Insight Density"), std::string::npos);
  EXPECT_NE(AssociationTemplate(RubricBandTable::DefaultAssociation()).system_text.find("a healthcare URL attached"),
            std::string::npos);
}

TEST(Templates, RubricTableEmbedded) {
  const auto t = ConsistencyTemplate(RubricBandTable::DefaultConsistency());
  EXPECT_NE(t.system_text.find(RubricBandTable::DefaultConsistency().Render()), std::string::npos);
  EXPECT_EQ(t.system_text.find("{Score rubrics table}"), std::string::npos);
}

TEST(PresentationChecklist, TenItems) {
  const auto& items = PresentationChecklist();
  ASSERT_EQ(items.size(), 10u);
  for (std::size_t i = 0; i < items.size(); ++i) EXPECT_EQ(items[i].item_id, static_cast<int>(i + 1));
  EXPECT_EQ(items[1].text, "Does the report contain zero grammar and spelling errors?");
  EXPECT_EQ(RenderChecklistSection({{1, "A?"}, {2, "B?"}}), "1. A?\n2. B?\n");
}

}  // namespace
}  // namespace deepeval
