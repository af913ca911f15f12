#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace deepeval {

/// One row of an issue-count rubric. The band covers issue counts from the
/// previous band's upper bound + 1 through `max_issues`; the final band has
/// no upper bound.
struct RubricBand {
  std::optional<int> max_issues;
  double score = 0;
  std::string description;

  friend bool operator==(const RubricBand&, const RubricBand&) = default;
};

/// Maps an issue count to a 0-100 score. Bands must partition the
/// nonnegative integers with strictly decreasing scores.
class RubricBandTable {
 public:
  explicit RubricBandTable(std::vector<RubricBand> bands, std::string count_header = "Issue Count");

  /// Factual & logical consistency rubric (issues = inconsistencies).
  static RubricBandTable DefaultConsistency();
  /// Citation association rubric (issues = uncited claims).
  static RubricBandTable DefaultAssociation();

  static RubricBandTable FromJson(const nlohmann::json& j, std::string count_header = "Issue Count");
  nlohmann::json ToJson() const;

  double Score(int issue_count) const;
  /// Markdown table embedded in the pointwise judging prompts.
  std::string Render() const;

  const std::vector<RubricBand>& bands() const { return bands_; }

 private:
  std::vector<RubricBand> bands_;
  std::string count_header_;
};

class RubricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace deepeval
