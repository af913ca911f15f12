#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "deepeval/rubric.h"
#include "deepeval/task_model.h"

namespace deepeval {

/// A judging prompt with `{name}` placeholders (lowercase identifiers).
struct PromptTemplate {
  std::string metric_id;
  std::string system_text;
  std::string user_text;
};

struct RenderedPrompt {
  std::string metric_id;
  std::string system_text;
  std::string user_text;
};

class RenderError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using PromptBindings = std::map<std::string, std::string, std::less<>>;

/// Placeholder names referenced by the template, system and user text.
std::set<std::string> Placeholders(const PromptTemplate& tmpl);

/// Single-pass substitution: bound values are never rescanned, so report
/// text containing braces is inserted verbatim. Throws RenderError naming
/// the first unbound placeholder.
RenderedPrompt RenderPrompt(const PromptTemplate& tmpl, const PromptBindings& bindings);

// Built-in templates. Metric ids: presentation, consistency, coverage,
// depth, association, and for citation accuracy: relevance, support.
PromptTemplate PresentationTemplate();
PromptTemplate ConsistencyTemplate(const RubricBandTable& rubric);
PromptTemplate CoverageTemplate();
PromptTemplate DepthTemplate();
PromptTemplate AssociationTemplate(const RubricBandTable& rubric);
PromptTemplate RelevanceTemplate();
PromptTemplate SupportTemplate();

/// The fixed ten-item presentation checklist, shared by all tasks.
const std::vector<ChecklistItem>& PresentationChecklist();

/// "1. question\n2. question\n..." keyed by item id.
std::string RenderChecklistSection(const std::vector<ChecklistItem>& items);

}  // namespace deepeval
