#include "deepeval/rubric.h"

#include <fmt/format.h>

namespace deepeval {
namespace {

std::vector<RubricBand> DefaultBands(const std::vector<std::string>& descriptions) {
  static constexpr int kUpper[] = {0, 2, 4, 6, 8, 10, 12, 14, 17};
  std::vector<RubricBand> bands;
  for (std::size_t i = 0; i < 9; ++i) {
    bands.push_back({kUpper[i], 100.0 - 10.0 * static_cast<double>(i), descriptions[i]});
  }
  bands.push_back({std::nullopt, 10.0, descriptions[9]});
  return bands;
}

std::string FormatScore(double s) {
  return s == static_cast<double>(static_cast<long long>(s)) ? fmt::format("{}", static_cast<long long>(s))
                                                               : fmt::format("{}", s);
}

}  // namespace

RubricBandTable::RubricBandTable(std::vector<RubricBand> bands, std::string count_header)
    : bands_(std::move(bands)), count_header_(std::move(count_header)) {
  if (bands_.empty()) throw RubricError("rubric needs at least one band");
  int prev_max = -1;
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    const auto& b = bands_[i];
    const bool last = i + 1 == bands_.size();
    if (last != !b.max_issues.has_value()) {
      throw RubricError("only the final rubric band is open-ended, and it must be");
    }
    if (b.max_issues && *b.max_issues <= prev_max) {
      throw RubricError(fmt::format("rubric band {} upper bound must exceed {}", i, prev_max));
    }
    if (i > 0 && !(b.score < bands_[i - 1].score)) {
      throw RubricError("rubric scores must strictly decrease");
    }
    if (b.score < 0 || b.score > 100) throw RubricError("rubric scores must lie in [0, 100]");
    if (b.max_issues) prev_max = *b.max_issues;
  }
}

RubricBandTable RubricBandTable::DefaultConsistency() {
  return RubricBandTable(DefaultBands({
                             "Perfect -- No contradictions or inconsistencies detected",
                             "Excellent -- Very minor inconsistencies",
                             "Very Good -- Few minor inconsistencies",
                             "Good -- Some inconsistencies",
                             "Above Average -- Several inconsistencies",
                             "Average -- Multiple inconsistencies",
                             "Below Average -- Many inconsistencies",
                             "Poor -- Extensive inconsistencies",
                             "Very Poor -- Pervasive inconsistencies",
                             "Unacceptable -- Overwhelming inconsistencies",
                         }),
                         "Issue Count");
}

RubricBandTable RubricBandTable::DefaultAssociation() {
  return RubricBandTable(DefaultBands({
                             "Perfect -- All major claims/facts have citations; fully traceable",
                             "Excellent -- Very few claims lack citations; minimal impact",
                             "Good -- Few claims lack citations; minor omissions",
                             "OK -- Some claims lack citations",
                             "Above Average -- Several claims lack citations",
                             "Average -- Many claims lack citations; significant association issues",
                             "Below Average -- Most claims lack citations",
                             "Poor -- Extensive uncited claims; report poorly supported",
                             "Very Poor -- Overwhelming lack of citations",
                             "Unacceptable -- Report largely untraceable",
                         }),
                         "Uncited Claims");
}

RubricBandTable RubricBandTable::FromJson(const nlohmann::json& j, std::string count_header) {
  if (!j.is_array()) throw RubricError("rubric must be a JSON array of bands");
  std::vector<RubricBand> bands;
  for (const auto& b : j) {
    RubricBand band;
    if (b.contains("max_issues") && !b["max_issues"].is_null()) band.max_issues = b["max_issues"].get<int>();
    band.score = b.at("score").get<double>();
    band.description = b.value("description", "");
    bands.push_back(std::move(band));
  }
  return RubricBandTable(std::move(bands), std::move(count_header));
}

nlohmann::json RubricBandTable::ToJson() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& b : bands_) {
    out.push_back({{"max_issues", b.max_issues ? nlohmann::json(*b.max_issues) : nlohmann::json(nullptr)},
                   {"score", b.score},
                   {"description", b.description}});
  }
  return out;
}

double RubricBandTable::Score(int issue_count) const {
  if (issue_count < 0) throw RubricError("issue count must be nonnegative");
  for (const auto& b : bands_) {
    if (!b.max_issues || issue_count <= *b.max_issues) return b.score;
  }
  return bands_.back().score;
}

std::string RubricBandTable::Render() const {
  std::string out = fmt::format("| Score | {} | Description |\n|---|---|---|\n", count_header_);
  int lo = 0;
  for (const auto& b : bands_) {
    std::string range;
    if (!b.max_issues) {
      range = fmt::format("{}+", lo);
    } else if (*b.max_issues == lo) {
      range = std::to_string(lo);
    } else {
      range = fmt::format("{}-{}", lo, *b.max_issues);
    }
    out += fmt::format("| {} | {} | {} |\n", FormatScore(b.score), range, b.description);
    if (b.max_issues) lo = *b.max_issues + 1;
  }
  return out;
}

}  // namespace deepeval
