#include "deepeval/prompts.h"

#include <cctype>

#include <fmt/format.h>

namespace deepeval {
namespace {

bool IsPlaceholderChar(char c) { return std::islower(static_cast<unsigned char>(c)) || c == '_'; }

// Calls on_text(piece) and on_placeholder(name) in document order.
template <typename OnText, typename OnPlaceholder>
void WalkTemplate(std::string_view text, OnText on_text, OnPlaceholder on_placeholder) {
  std::size_t pos = 0;
  std::size_t emitted = 0;
  while ((pos = text.find('{', pos)) != std::string_view::npos) {
    std::size_t end = pos + 1;
    while (end < text.size() && IsPlaceholderChar(text[end])) ++end;
    if (end > pos + 1 && end < text.size() && text[end] == '}') {
      on_text(text.substr(emitted, pos - emitted));
      on_placeholder(text.substr(pos + 1, end - pos - 1));
      emitted = end + 1;
      pos = end + 1;
    } else {
      ++pos;
    }
  }
  on_text(text.substr(emitted));
}

std::string RenderText(std::string_view text, const PromptBindings& bindings) {
  std::string out;
  WalkTemplate(
      text, [&](std::string_view piece) { out.append(piece); },
      [&](std::string_view name) {
        auto it = bindings.find(name);
        if (it == bindings.end()) throw RenderError(fmt::format("unbound placeholder: {}", name));
        out.append(it->second);
      });
  return out;
}

constexpr std::string_view kChecklistJsonShape =
    "Use this shape: {\"evaluations\": [{\"item_id\": <item number>, \"score\": <0 or 1>, "
    "\"justification\": \"<text>\"}]}, with exactly one entry per item.";

}  // namespace

std::set<std::string> Placeholders(const PromptTemplate& tmpl) {
  std::set<std::string> names;
  auto collect = [&](std::string_view text) {
    WalkTemplate(
        text, [](std::string_view) {}, [&](std::string_view name) { names.emplace(name); });
  };
  collect(tmpl.system_text);
  collect(tmpl.user_text);
  return names;
}

RenderedPrompt RenderPrompt(const PromptTemplate& tmpl, const PromptBindings& bindings) {
  return {tmpl.metric_id, RenderText(tmpl.system_text, bindings), RenderText(tmpl.user_text, bindings)};
}

const std::vector<ChecklistItem>& PresentationChecklist() {
  static const std::vector<ChecklistItem> kItems{
      {1,
       "Does the report present a clear, coherent, and logically ordered structure so that the organization is "
       "easy to follow and directly addresses the research question?"},
      {2, "Does the report contain zero grammar and spelling errors?"},
      {3, "Does every entry in the reference list correspond to at least one in-text citation?"},
      {4, "Does every in-text citation have a corresponding entry in the reference list?"},
      {5,
       "Is there exactly one \"References\" (or \"Bibliography\" / \"Sources\") section, and are its entries "
       "sorted according to a single, consistent scheme?"},
      {6, "Is a single, consistent citation style used throughout the entire document?"},
      {7,
       "Are all in-text citations placed logically at the end of a clause or sentence, without interrupting "
       "grammatical flow?"},
      {8,
       "If the report includes figures or tables, does each one contain complete data or a valid visual "
       "element? (If none are included, the report automatically passes this test.)"},
      {9,
       "Is the formatting correct and consistent? For example: (a) If delivered in Markdown, are proper heading "
       "levels (#, ##, etc.) used instead of plain text for section titles; (b) if Markdown tables are included, "
       "is their syntax valid and renderable?"},
      {10,
       "If the citations are numbered, are there no skipped numbers (e.g., [23], [25], [26] with [24] missing) "
       "and no duplicates (two different sources assigned the same number, or one source assigned multiple "
       "numbers)?"},
  };
  return kItems;
}

std::string RenderChecklistSection(const std::vector<ChecklistItem>& items) {
  std::string out;
  for (const auto& item : items) out += fmt::format("{}. {}\n", item.item_id, item.text);
  return out;
}

PromptTemplate PresentationTemplate() {
  std::string system =
      "You are an expert evaluator assessing research reports for presentation quality and formatting "
      "standards. Your sole task is to determine if the report meets specific presentation criteria with binary "
      "scoring (0 or 1).\n\n"
      "EVALUATION CRITERIA:\n"
      "- Score 1: The report fully satisfies the presentation criterion with no issues.\n"
      "- Score 0: The report fails to meet the presentation criterion or has any issues that prevent it from "
      "passing.\n\n"
      "INSTRUCTIONS:\n"
      "- Read the research report carefully to assess presentation quality, formatting, and structural "
      "elements.\n"
      "- For each presentation criterion, determine if the report fully meets the standard.\n"
      "- Provide a binary score (0 or 1) for each criterion.\n"
      "- Provide a clear justification for your score, referencing specific elements in the report.\n\n"
      "IMPORTANT GUIDELINES:\n"
      "- Strict Binary Assessment: A score of 1 requires complete satisfaction of the criterion. Any failure to "
      "meet the standard results in a score of 0.\n"
      "- Focus on Presentation: Evaluate only presentation quality, formatting, structure, grammar, citations, "
      "and formatting consistency. Do not evaluate content accuracy, research quality, or factual correctness.\n"
      "- Citation Standards: For citation-related criteria, carefully check that all in-text citations have "
      "corresponding reference entries and vice versa.\n"
      "- Grammar and Spelling: For grammar/spelling criteria, any errors result in a score of 0.\n"
      "- Formatting Consistency: Check for consistent use of formatting elements like headers, citation styles, "
      "etc.\n\n"
      "Respond with a JSON object containing your evaluations for each presentation criterion. ";
  system += kChecklistJsonShape;
  return {"presentation", std::move(system),
          "ORIGINAL RESEARCH QUERY:\n{query}\n\n"
          "PRESENTATION CHECKLIST ITEMS TO EVALUATE:\n{checklist_section}\n\n"
          "RESEARCH REPORT TO EVALUATE:\n{report_content}\n"};
}

namespace {

std::string PointwiseSystem(std::string_view criterion, const RubricBandTable& rubric, std::string_view focus,
                            std::string_view remarks) {
  return fmt::format(
      "You are an expert evaluator assessing research reports based on the Criterion Description: {0}.\n\n"
      "INSTRUCTIONS:\n"
      "- Be very careful and detail-oriented. Read the report sentence by sentence and identify concrete "
      "issues.\n"
      "- Be critical and thorough in your evaluation: do not overlook problems or give inflated scores.\n"
      "- Find as many substantive issues relevant to the criterion as possible.\n"
      "- Issues must be genuine violations that clearly dissatisfy the criterion, not minor nitpicks or "
      "subjective preferences.\n"
      "- Do not include issues that are irrelevant to the criterion.\n\n"
      "Criterion Description: {0}\n\n"
      "Score rubrics:\n\n{1}\n"
      "Focus on:\n{2}\n\n"
      "Remarks:\n{3}\n\n"
      "OUTPUT FORMAT:\n"
      "Respond in JSON with the following fields:\n"
      "- specific_issues: A list of specific problems, with exact quotes or locations in the text (e.g., \"In "
      "section X...\", \"The claim that '...' is unsupported\").\n"
      "- total_issues: Total number of issues (must match the length of specific_issues).\n"
      "- score: An integer from 1-10 based on the rubric and issues identified.\n"
      "- reasoning: A detailed explanation (2-3 sentences) summarizing your assessment and referencing the "
      "identified issues.\n",
      criterion, rubric.Render(), focus, remarks);
}

constexpr std::string_view kPointwiseUser =
    "TASK:\n{task}\n\n"
    "REPORT TO EVALUATE:\n{report}\n\n"
    "Please evaluate this report on the criterion and provide your assessment in JSON format.\n";

}  // namespace

PromptTemplate ConsistencyTemplate(const RubricBandTable& rubric) {
  return {"consistency",
          PointwiseSystem("Factual and Logical Consistency", rubric,
                          "- Logical inconsistencies\n"
                          "- Factual contradictions (facts, claims, numbers, dates, names, etc.)",
                          "1. Factual accuracy (e.g., whether the report is free of factual errors) is a separate "
                          "criterion and should NOT be considered here.\n"
                          "2. The same source can be used to cite multiple claims. This does NOT constitute a "
                          "contradiction."),
          std::string(kPointwiseUser)};
}

PromptTemplate AssociationTemplate(const RubricBandTable& rubric) {
  return {"association",
          PointwiseSystem(
              "Citation Association", rubric,
              "- Proper association of claims with citations. Each factual claim that requires evidence should be "
              "accompanied by a corresponding citation. Flag cases where claims lack citations or where citations "
              "are clearly mismatched. For example, a healthcare URL attached to a statement on market share such "
              "as \"medium-lift launch vehicles held 56.63% of the market in 2024\".",
              "1. A URL may not always be attached immediately after a claim; in some cases, it appears at the end "
              "of a paragraph and is intended to support the preceding claims within that paragraph.\n"
              "2. Factual accuracy (e.g., whether the report is free of factual errors) is a separate criterion "
              "and should NOT be considered here."),
          std::string(kPointwiseUser)};
}

PromptTemplate CoverageTemplate() {
  std::string system =
      "You are an expert evaluator assessing research reports against specific checklist criteria derived from "
      "the original research query.\n"
      "Your sole task is to determine if the report fully and completely delivers the specific data and "
      "information requested for each item.\n\n"
      "EVALUATION CRITERIA:\n"
      "- Score 1: The report fully and completely provides all specific data and information required by the "
      "checklist item.\n"
      "- Score 0: The report fails to provide the required data or provides an incomplete response.\n\n"
      "INSTRUCTIONS:\n"
      "- Read the original research query to understand the exact data being requested.\n"
      "- Read the research report to find the data that directly and completely answers the query.\n"
      "- For each checklist item, determine if the report delivers all required components of the answer.\n"
      "- Provide a binary score (0 or 1).\n"
      "- Provide a clear justification for your score, referencing the completeness or incompleteness of the "
      "provided data.\n\n"
      "IMPORTANT GUIDELINES:\n"
      "- Strict Requirement for Completeness: A score of 1 requires 100% fulfillment of the checklist item. If "
      "any part of the requested information for that item is missing, incorrect, or incomplete, the score must "
      "be 0. For example, if a checklist item requires a name, a date, and a valid link, the report must provide "
      "all three to receive a score of 1. Providing only two of the three results in a score of 0.\n"
      "- Data vs. Methodology: Your evaluation must distinguish between a report that provides the answer versus "
      "one that describes a process to find the answer. A methodology, plan, or description of how the data "
      "could be found is not a substitute for the data itself and must be scored 0.\n"
      "- No Credit for Placeholders: A report that acknowledges a checklist item but explicitly states the "
      "information is missing, unavailable, or not provided (e.g., \"Information not provided,\" \"Data not "
      "found\") must receive a score of 0 for that item.\n"
      "- Focus on Delivery: Base your evaluation strictly on the final data delivered in the report. Do not score "
      "based on what the report promises, implies, or outlines as its goal.\n\n"
      "Respond with a JSON object containing your evaluations for each checklist item. ";
  system += kChecklistJsonShape;
  return {"coverage", std::move(system),
          "ORIGINAL RESEARCH QUERY:\n{query}\n\n"
          "CHECKLIST ITEMS TO EVALUATE:\n{checklist_section}\n\n"
          "RESEARCH REPORT TO EVALUATE:\n{report_content}\n"};
}

PromptTemplate DepthTemplate() {
  return {"depth",
          "You are an impartial research report evaluation expert. Your task is to compare Report A and Report B "
          "side-by-side and decide which demonstrates greater depth of analysis.\n\n"
          "What \"Depth of Analysis\" Means\n"
          "Depth = how far the report goes beyond surface description into reasoning, insight, and layered "
          "analysis.\n\n"
          "Scoring Dimensions (0-5 each)\n"
          "Assign each report a score on these five dimensions:\n"
          "1. Granularity of Reasoning (0-5)\n"
          "   - 0 = purely abstract or vague\n"
          "   - 3 = some unpacking into mechanisms or details\n"
          "   - 5 = consistently breaks down ideas into specific causal chains or subcomponents\n"
          "2. Multi-Layered Insight (0-5)\n"
          "   - 0 = only surface-level restatement\n"
          "   - 3 = includes some implications or second-order effects\n"
          "   - 5 = consistently explores trade-offs, deeper implications, \"so what\" insights\n"
          "3. Critical Evaluation (0-5)\n"
          "   - 0 = passive description only\n"
          "   - 3 = some questioning of assumptions or limited contrast of alternatives\n"
          "   - 5 = strong critique, weighing of scenarios, probing of limitations\n"
          "4. Analytical Use of Evidence (0-5)\n"
          "   - 0 = mentions facts/examples without connecting them to reasoning\n"
          "   - 3 = some evidence linked to argument\n"
          "   - 5 = evidence consistently advances or sharpens analysis\n"
          "5. Insight Density (0-5)\n"
          "   - 0 = mostly filler or generic phrasing\n"
          "   - 3 = mix of insight and filler\n"
          "   - 5 = highly concentrated with substantive analysis per token\n\n"
          "Total Depth Score\n"
          "- Sum the five criteria -> total score (0-25).\n\n"
          "Judging Rules\n"
          "1. Compare both reports only on depth, using the rubric above.\n"
          "2. Give each report a 0-25 depth score.\n"
          "3. Decide the outcome:\n"
          "   - If one report's score is more than 1 point higher -> it wins.\n"
          "   - If the difference is <= 1 point -> call it a tie.\n\n"
          "Exclude Entirely\n"
          "- Coverage (breadth of topics).\n"
          "- Factual correctness or consistency.\n"
          "- Presentation, formatting, style, grammar.\n"
          "- Citation traceability.\n"
          "- Length alone (verbosity != depth).\n\n"
          "Output Format (JSON only)\n"
          "{\n"
          "  \"winner\": \"A | B | tie\",\n"
          "  \"scores\": {\n"
          "    \"A\": {\"granularity\": 0-5, \"insight\": 0-5, \"critique\": 0-5, \"evidence\": 0-5, "
          "\"density\": 0-5, \"total\": 0-25},\n"
          "    \"B\": {\"granularity\": 0-5, \"insight\": 0-5, \"critique\": 0-5, \"evidence\": 0-5, "
          "\"density\": 0-5, \"total\": 0-25}\n"
          "  },\n"
          "  \"justification\": \"less than 80 words explaining which report shows deeper reasoning and why, "
          "referencing specific differences in depth.\",\n"
          "  \"major_flaws\": {\n"
          "    \"A\": [\"notes on shallow reasoning or lack of insight if any\"],\n"
          "    \"B\": [\"notes on shallow reasoning or lack of insight if any\"]\n"
          "  }\n"
          "}\n",
          "Please compare these two reports ONLY in terms of depth of analysis relative to the research problem "
          "and determine which demonstrates greater analytical depth. {query}\n\n"
          "REPORT A:\n{report_a_content}\n\n"
          "REPORT B:\n{report_b_content}\n"};
}

PromptTemplate RelevanceTemplate() {
  return {"relevance",
          "You screen cited web pages for topical relevance. You are given a research task, the claims in a "
          "report that cite one URL, and only the title and opening of that page.\n"
          "Decide whether the page is on the topic of the task and the claims. Judge topic only: do not decide "
          "whether the page proves the claims, and do not penalize a page for being brief.\n"
          "A page about an unrelated subject (for example, a healthcare article cited for launch-vehicle market "
          "share) is irrelevant.\n\n"
          "Respond in JSON with the fields:\n"
          "- relevant: true or false\n"
          "- reason: one sentence\n",
          "RESEARCH TASK:\n{task}\n\n"
          "CITED URL: {url}\n"
          "PAGE TITLE: {title}\n"
          "PAGE OPENING:\n{page_prefix}\n\n"
          "CLAIMS CITING THIS URL:\n{claims}\n"};
}

PromptTemplate SupportTemplate() {
  return {"support",
          "You verify citations. You are given the readable text of one web page and a numbered list of claims "
          "from a report that cite it.\n"
          "For each claim decide whether the page content sufficiently supports it. A claim is supported only if "
          "the page states it or directly implies it, including any specific figures, dates, and names in the "
          "claim. A page that is on topic but silent on the specific claim does not support it.\n\n"
          "Respond in JSON: {\"verdicts\": [{\"claim_id\": <claim number>, \"supported\": true or false, "
          "\"reason\": \"<one sentence>\"}]}, with exactly one verdict per claim.\n",
          "CITED URL: {url}\n\n"
          "PAGE CONTENT:\n{page_content}\n\n"
          "CLAIMS:\n{claims}\n"};
}

}  // namespace deepeval
