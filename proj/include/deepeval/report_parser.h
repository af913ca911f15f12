#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace deepeval {

/// Half-open byte range [begin, end) into ParsedReport::raw.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool contains(const Span& other) const { return begin <= other.begin && other.end <= end; }
  std::string_view of(std::string_view text) const { return text.substr(begin, end - begin); }

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

/// A citation key: a reference number or a normalized URL.
using CitationKey = std::variant<int, std::string>;

std::string KeyToString(const CitationKey& key);

struct InlineCitation {
  enum class Kind { kNumberedBracket, kBareUrl, kMarkdownLink };
  Kind kind = Kind::kNumberedBracket;
  CitationKey key;
  // For numbered citations the span covers the whole bracket group, so
  // "[23, 25]" yields two citations that share a span.
  Span span;
};

struct ReferenceEntry {
  std::optional<int> number;
  std::string label;
  std::optional<std::string> url;  // normalized
  Span span;                       // the full entry line, markers included
};

struct ReferenceSection {
  std::string title;
  Span title_span;
  Span body_span;
  std::vector<ReferenceEntry> entries;
};

struct Section {
  int level = 0;
  std::string title;
  Span title_span;
  Span body_span;
};

struct TableBlock {
  Span span;
  bool syntactically_valid = false;
  std::size_t rows = 0;     // excluding the separator row
  std::size_t columns = 0;  // header cell count
};

/// One sentence-level claim. `attached_keys` holds the citation keys inside
/// the sentence plus any inherited from a paragraph-tail citation cluster.
struct ClaimUnit {
  Span span;
  std::string text;
  std::vector<CitationKey> attached_keys;
  bool inherited = false;  // keys came from the paragraph tail
};

struct ParsedReport {
  std::string raw;
  std::vector<Section> sections;
  std::vector<InlineCitation> inline_citations;
  std::vector<ReferenceSection> reference_sections;
  std::vector<TableBlock> tables;
  std::vector<ClaimUnit> claim_units;
  /// Lines that look like section titles typeset in bold instead of as
  /// markdown headings, e.g. "**Methodology**".
  std::vector<Span> bold_pseudo_headings;

  std::vector<const ReferenceEntry*> all_references() const;
};

/// Total and deterministic; never throws on arbitrary input.
ParsedReport ParseReport(std::string text);

/// True when a heading title names a references section (References,
/// Bibliography, Sources, Key Citations; case-insensitive, numbering and a
/// trailing colon ignored).
bool IsReferenceSectionTitle(std::string_view title);

struct ClaimCitations {
  ClaimUnit claim;
  std::vector<std::string> urls;       // normalized, first-appearance order
  std::vector<int> unresolved_numbers; // numbered keys without a usable reference URL
};

/// One entry per claim with at least one citation key. Numbered keys are
/// resolved through the reference list (first entry carrying the number).
std::vector<ClaimCitations> ExtractClaimCitationPairs(const ParsedReport& report);

}  // namespace deepeval
