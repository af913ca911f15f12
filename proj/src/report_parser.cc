#include "deepeval/report_parser.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <utility>

#include "deepeval/url.h"

namespace deepeval {
namespace {

enum class LineKind { kBlank, kText, kHeading, kTable, kCode, kFence, kBoldHeading };

struct Line {
  std::size_t begin = 0;
  std::size_t end = 0;  // excludes the newline and a trailing '\r'
  LineKind kind = LineKind::kText;
  int heading_level = 0;
  Span heading_title;
  bool in_references = false;
  bool list_item = false;
  std::size_t content_begin = 0;  // after indentation, list marker, quote marker
};

bool IsSpace(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }
bool IsDigit(char c) { return c >= '0' && c <= '9'; }
bool IsAlnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string_view Trim(std::string_view s) {
  while (!s.empty() && IsSpace(s.front())) s.remove_prefix(1);
  while (!s.empty() && IsSpace(s.back())) s.remove_suffix(1);
  return s;
}

Span TrimSpan(std::string_view raw, Span s) {
  while (s.begin < s.end && IsSpace(raw[s.begin])) ++s.begin;
  while (s.end > s.begin && IsSpace(raw[s.end - 1])) --s.end;
  return s;
}

std::size_t SkipIndent(std::string_view raw, std::size_t pos, std::size_t end) {
  while (pos < end && (raw[pos] == ' ' || raw[pos] == '\t')) ++pos;
  return pos;
}

// Position after a list marker ("- ", "* ", "+ ", "12. ", "3) ") or npos.
std::size_t ListMarkerEnd(std::string_view raw, std::size_t pos, std::size_t end) {
  if (pos >= end) return std::string_view::npos;
  char c = raw[pos];
  if ((c == '-' || c == '*' || c == '+') && pos + 1 < end && (raw[pos + 1] == ' ' || raw[pos + 1] == '\t')) {
    return SkipIndent(raw, pos + 1, end);
  }
  std::size_t p = pos;
  while (p < end && IsDigit(raw[p]) && p - pos < 9) ++p;
  if (p > pos && p + 1 < end && (raw[p] == '.' || raw[p] == ')') && (raw[p + 1] == ' ' || raw[p + 1] == '\t')) {
    return SkipIndent(raw, p + 1, end);
  }
  return std::string_view::npos;
}

bool IsFence(std::string_view trimmed) { return trimmed.starts_with("```") || trimmed.starts_with("~~~"); }

bool IsBoldHeadingText(std::string_view t) {
  if (t.ends_with(':')) t.remove_suffix(1);
  std::string_view inner;
  if (t.size() > 4 && t.starts_with("**") && t.ends_with("**")) {
    inner = t.substr(2, t.size() - 4);
  } else if (t.size() > 4 && t.starts_with("__") && t.ends_with("__")) {
    inner = t.substr(2, t.size() - 4);
  } else {
    return false;
  }
  if (inner.ends_with(':')) inner.remove_suffix(1);
  inner = Trim(inner);
  if (inner.empty() || inner.size() > 100) return false;
  if (inner.find("**") != std::string_view::npos || inner.find("__") != std::string_view::npos) return false;
  const char last = inner.back();
  if (last == '.' || last == '!' || last == '?' || last == ',' || last == ';') return false;
  return std::any_of(inner.begin(), inner.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
}

std::vector<Line> SplitLines(std::string_view raw) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    std::size_t nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw.size();
    Line line;
    line.begin = pos;
    line.end = (nl > pos && raw[nl - 1] == '\r') ? nl - 1 : nl;
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

// Cells of a table row, split on unescaped pipes outside code spans.
std::size_t CountCells(std::string_view row) {
  row = Trim(row);
  std::size_t cells = 1;
  bool in_code = false;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] == '\\') {
      ++i;
      continue;
    }
    if (row[i] == '`') in_code = !in_code;
    if (row[i] == '|' && !in_code) ++cells;
  }
  if (row.starts_with('|')) --cells;
  if (row.size() > 1 && row.ends_with('|') && !row.ends_with("\\|")) --cells;
  return cells;
}

bool IsSeparatorRow(std::string_view row) {
  row = Trim(row);
  if (row.starts_with('|')) row.remove_prefix(1);
  if (row.ends_with('|')) row.remove_suffix(1);
  if (row.empty()) return false;
  std::size_t start = 0;
  while (true) {
    const std::size_t bar = row.find('|', start);
    std::string_view cell = Trim(row.substr(start, bar == std::string_view::npos ? row.npos : bar - start));
    if (cell.starts_with(':')) cell.remove_prefix(1);
    if (cell.ends_with(':')) cell.remove_suffix(1);
    if (cell.empty() || cell.find_first_not_of('-') != std::string_view::npos) return false;
    if (bar == std::string_view::npos) return true;
    start = bar + 1;
  }
}

int ParsePositiveInt(std::string_view digits) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return -1;
  return v;
}

// ---------------------------------------------------------------------------
// Inline tokens

struct UrlToken {
  Span span;
  std::string text;
};

// Extent of a bare URL starting at `pos`; trailing punctuation is not part
// of the URL, and a closing paren only counts when balanced inside the URL.
std::size_t BareUrlEnd(std::string_view raw, std::size_t pos, std::size_t end) {
  std::size_t p = pos;
  int parens = 0;
  while (p < end) {
    const char c = raw[p];
    if (IsSpace(c) || c == '<' || c == '>' || c == '"' || c == '`' || c == '[' || c == ']') break;
    if (c == '(') ++parens;
    if (c == ')') {
      if (parens == 0) break;
      --parens;
    }
    ++p;
  }
  while (p > pos) {
    const char c = raw[p - 1];
    if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '\'' || c == '*' ||
        c == '_') {
      --p;
    } else {
      break;
    }
  }
  return p;
}

bool StartsWithScheme(std::string_view raw, std::size_t pos) {
  std::string_view s = raw.substr(pos, 8);
  auto ieq = [](std::string_view a, std::string_view b) {
    return a.size() >= b.size() && std::equal(b.begin(), b.end(), a.begin(), [](char x, char y) {
             return std::tolower(static_cast<unsigned char>(x)) == y;
           });
  };
  return ieq(s, "https://") || ieq(s, "http://");
}

// Matching ']' for the '[' at `open`, respecting nesting; npos if none.
std::size_t MatchBracket(std::string_view raw, std::size_t open, std::size_t end, char o, char c) {
  int depth = 0;
  for (std::size_t p = open; p < end; ++p) {
    if (raw[p] == '\\') {
      ++p;
      continue;
    }
    if (raw[p] == o) ++depth;
    if (raw[p] == c && --depth == 0) return p;
  }
  return std::string_view::npos;
}

struct LinkToken {
  Span whole;
  Span target;
  bool image = false;
};

// "[text](target)" or "![alt](target)" starting at `pos`.
std::optional<LinkToken> MatchLink(std::string_view raw, std::size_t pos, std::size_t end) {
  LinkToken tok;
  std::size_t open = pos;
  if (raw[pos] == '!') {
    tok.image = true;
    ++open;
  }
  if (open >= end || raw[open] != '[') return std::nullopt;
  const std::size_t close = MatchBracket(raw, open, end, '[', ']');
  if (close == std::string_view::npos || close + 1 >= end || raw[close + 1] != '(') return std::nullopt;
  const std::size_t paren_close = MatchBracket(raw, close + 1, end, '(', ')');
  if (paren_close == std::string_view::npos) return std::nullopt;
  Span target = TrimSpan(raw, {close + 2, paren_close});
  // Drop an optional link title: (url "title")
  for (std::size_t p = target.begin; p < target.end; ++p) {
    if (IsSpace(raw[p])) {
      target.end = p;
      break;
    }
  }
  if (target.size() >= 2 && raw[target.begin] == '<' && raw[target.end - 1] == '>') {
    ++target.begin;
    --target.end;
  }
  tok.whole = {pos, paren_close + 1};
  tok.target = target;
  return tok;
}

// "[n]" or "[n, m, ...]" at `pos`. Returns the closing position and numbers.
std::optional<std::pair<std::size_t, std::vector<int>>> MatchNumberedBracket(std::string_view raw, std::size_t pos,
                                                                            std::size_t end) {
  if (raw[pos] != '[') return std::nullopt;
  std::vector<int> numbers;
  std::size_t p = pos + 1;
  while (true) {
    while (p < end && raw[p] == ' ') ++p;
    const std::size_t ds = p;
    while (p < end && IsDigit(raw[p]) && p - ds < 6) ++p;
    if (p == ds) return std::nullopt;
    const int n = ParsePositiveInt(raw.substr(ds, p - ds));
    if (n < 1) return std::nullopt;
    numbers.push_back(n);
    while (p < end && raw[p] == ' ') ++p;
    if (p < end && raw[p] == ',') {
      ++p;
      continue;
    }
    if (p < end && raw[p] == ']') break;
    return std::nullopt;
  }
  // "[3](url)" is a markdown link and "[3]: url" a link definition.
  if (p + 1 < end && (raw[p + 1] == '(' || raw[p + 1] == ':')) return std::nullopt;
  return std::make_pair(p + 1, std::move(numbers));
}

struct InlineScan {
  std::vector<InlineCitation> citations;
  std::vector<Span> protected_spans;  // links, images, code spans, URLs
};

void ScanInline(std::string_view raw, std::size_t begin, std::size_t end, InlineScan& out) {
  std::size_t p = begin;
  while (p < end) {
    const char c = raw[p];
    if (c == '\\') {
      p += 2;
      continue;
    }
    if (c == '`') {
      std::size_t ticks = 0;
      while (p + ticks < end && raw[p + ticks] == '`') ++ticks;
      const std::string fence(ticks, '`');
      const std::size_t close = raw.substr(0, end).find(fence, p + ticks);
      if (close != std::string_view::npos) {
        out.protected_spans.push_back({p, close + ticks});
        p = close + ticks;
        continue;
      }
      p += ticks;
      continue;
    }
    if (c == '!' || c == '[') {
      if (auto link = MatchLink(raw, p, end)) {
        out.protected_spans.push_back(link->whole);
        if (!link->image) {
          const std::string_view target = link->target.of(raw);
          if (StartsWithScheme(raw, link->target.begin)) {
            if (auto norm = NormalizeUrl(target)) {
              out.citations.push_back({InlineCitation::Kind::kMarkdownLink, *norm, link->whole});
            }
          }
        }
        p = link->whole.end;
        continue;
      }
      if (c == '[') {
        if (auto nb = MatchNumberedBracket(raw, p, end)) {
          const Span span{p, nb->first};
          for (int n : nb->second) out.citations.push_back({InlineCitation::Kind::kNumberedBracket, n, span});
          out.protected_spans.push_back(span);
          p = nb->first;
          continue;
        }
      }
    }
    if ((c == 'h' || c == 'H') && StartsWithScheme(raw, p) && (p == begin || !IsAlnum(raw[p - 1]))) {
      std::size_t url_begin = p;
      std::size_t url_end = BareUrlEnd(raw, p, end);
      Span whole{url_begin, url_end};
      if (url_begin > begin && raw[url_begin - 1] == '<' && url_end < end && raw[url_end] == '>') {
        whole = {url_begin - 1, url_end + 1};
      }
      if (auto norm = NormalizeUrl(raw.substr(url_begin, url_end - url_begin))) {
        out.citations.push_back({InlineCitation::Kind::kBareUrl, *norm, {url_begin, url_end}});
      }
      out.protected_spans.push_back(whole);
      p = std::max(url_end, p + 1);
      continue;
    }
    ++p;
  }
}

// ---------------------------------------------------------------------------
// Reference entries

std::optional<ReferenceEntry> ParseReferenceLine(std::string_view raw, const Line& line) {
  std::size_t p = SkipIndent(raw, line.begin, line.end);
  bool marker = false;
  if (p < line.end && (raw[p] == '-' || raw[p] == '*' || raw[p] == '+') && p + 1 < line.end &&
      (raw[p + 1] == ' ' || raw[p + 1] == '\t')) {
    p = SkipIndent(raw, p + 1, line.end);
    marker = true;
  }
  ReferenceEntry entry;
  entry.span = TrimSpan(raw, {line.begin, line.end});

  // [n] / [^n] / [n]: or "n." / "n)"
  if (p < line.end && raw[p] == '[') {
    std::size_t q = p + 1;
    if (q < line.end && raw[q] == '^') ++q;
    const std::size_t ds = q;
    while (q < line.end && IsDigit(raw[q])) ++q;
    if (q > ds && q < line.end && raw[q] == ']') {
      const int n = ParsePositiveInt(raw.substr(ds, q - ds));
      if (n >= 0 && !(q + 1 < line.end && raw[q + 1] == '(')) {
        if (n >= 1) entry.number = n;
        p = q + 1;
        if (p < line.end && raw[p] == ':') ++p;
      }
    }
  } else {
    std::size_t q = p;
    while (q < line.end && IsDigit(raw[q]) && q - p < 6) ++q;
    if (q > p && q + 1 < line.end && (raw[q] == '.' || raw[q] == ')') && IsSpace(raw[q + 1])) {
      const int n = ParsePositiveInt(raw.substr(p, q - p));
      if (n >= 1) entry.number = n;
      p = q + 1;
    }
  }

  // First URL: markdown link target or bare URL.
  std::string label;
  std::size_t cursor = p;
  std::size_t scan = p;
  while (scan < line.end && !entry.url) {
    if (raw[scan] == '[') {
      if (auto link = MatchLink(raw, scan, line.end); link && StartsWithScheme(raw, link->target.begin)) {
        entry.url = NormalizeUrl(link->target.of(raw));
        label.append(raw.substr(cursor, scan - cursor));
        label.append(raw.substr(scan + 1, link->target.begin - 2 - (scan + 1)));
        cursor = link->whole.end;
        break;
      }
    }
    if ((raw[scan] == 'h' || raw[scan] == 'H') && StartsWithScheme(raw, scan)) {
      const std::size_t ue = BareUrlEnd(raw, scan, line.end);
      entry.url = NormalizeUrl(raw.substr(scan, ue - scan));
      std::size_t label_end = scan;
      if (label_end > cursor && raw[label_end - 1] == '<') --label_end;
      label.append(raw.substr(cursor, label_end - cursor));
      cursor = ue;
      if (cursor < line.end && raw[cursor] == '>') ++cursor;
      break;
    }
    ++scan;
  }
  if (!entry.url) {
    label.append(raw.substr(cursor, line.end - cursor));
  } else {
    label.append(raw.substr(cursor, line.end - cursor));
  }

  std::string_view trimmed = Trim(label);
  while (!trimmed.empty() && (trimmed.back() == ':' || trimmed.back() == '-' || trimmed.back() == ',' ||
                              trimmed.back() == '(' || IsSpace(trimmed.back()))) {
    trimmed.remove_suffix(1);
  }
  while (!trimmed.empty() && (trimmed.front() == '-' || IsSpace(trimmed.front()))) trimmed.remove_prefix(1);
  entry.label = std::string(trimmed);

  if (!entry.number && !entry.url && !marker) return std::nullopt;
  if (entry.label.empty()) {
    if (entry.url) {
      entry.label = *entry.url;
    } else {
      return std::nullopt;
    }
  }
  return entry;
}

// ---------------------------------------------------------------------------
// Sentence segmentation

constexpr std::array<std::string_view, 16> kAbbreviations{
    "e.g", "i.e", "etc", "vs", "Dr", "Mr", "Mrs", "Ms", "St", "U.S", "U.K", "No", "Fig", "al", "approx", "Inc"};

bool EndsWithAbbreviation(std::string_view raw, std::size_t begin, std::size_t dot) {
  std::size_t w = dot;
  while (w > begin && !IsSpace(raw[w - 1]) && raw[w - 1] != '(') --w;
  std::string_view word = raw.substr(w, dot - w);
  for (auto abbr : kAbbreviations) {
    if (word == abbr) return true;
  }
  // Single capital initial ("J. Smith").
  return word.size() == 1 && std::isupper(static_cast<unsigned char>(word[0]));
}

bool HasWordChar(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return IsAlnum(c) || static_cast<unsigned char>(c) >= 0x80; });
}

struct Paragraph {
  std::size_t begin = 0;
  std::size_t end = 0;
};

}  // namespace

std::string KeyToString(const CitationKey& key) {
  if (const int* n = std::get_if<int>(&key)) return "[" + std::to_string(*n) + "]";
  return std::get<std::string>(key);
}

std::vector<const ReferenceEntry*> ParsedReport::all_references() const {
  std::vector<const ReferenceEntry*> out;
  for (const auto& sec : reference_sections) {
    for (const auto& e : sec.entries) out.push_back(&e);
  }
  return out;
}

bool IsReferenceSectionTitle(std::string_view title) {
  std::string t;
  for (char c : Trim(title)) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  std::string_view v = t;
  // Leading section numbering ("7.", "VII.", "7 ")
  std::size_t p = 0;
  while (p < v.size() && (IsDigit(v[p]) || v[p] == '.')) ++p;
  if (p > 0) v = Trim(v.substr(p));
  while (!v.empty() && (v.back() == ':' || v.back() == '*')) v.remove_suffix(1);
  while (!v.empty() && v.front() == '*') v.remove_prefix(1);
  v = Trim(v);
  return v == "references" || v == "bibliography" || v == "sources" || v == "key citations";
}

ParsedReport ParseReport(std::string text) {
  ParsedReport report;
  report.raw = std::move(text);
  const std::string_view raw = report.raw;
  std::vector<Line> lines = SplitLines(raw);

  // Pass 1: line kinds.
  bool in_fence = false;
  for (auto& line : lines) {
    const std::string_view content = raw.substr(line.begin, line.end - line.begin);
    const std::string_view trimmed = Trim(content);
    if (IsFence(trimmed)) {
      line.kind = LineKind::kFence;
      in_fence = !in_fence;
      continue;
    }
    if (in_fence) {
      line.kind = LineKind::kCode;
      continue;
    }
    if (trimmed.empty()) {
      line.kind = LineKind::kBlank;
      continue;
    }
    const std::size_t indent = SkipIndent(raw, line.begin, line.end);
    if (indent - line.begin <= 3 && raw[indent] == '#') {
      std::size_t h = indent;
      while (h < line.end && raw[h] == '#') ++h;
      const int level = static_cast<int>(h - indent);
      if (level <= 6 && (h == line.end || raw[h] == ' ' || raw[h] == '\t')) {
        Span title = TrimSpan(raw, {h, line.end});
        while (title.end > title.begin && raw[title.end - 1] == '#') --title.end;
        title = TrimSpan(raw, title);
        line.kind = LineKind::kHeading;
        line.heading_level = level;
        line.heading_title = title;
        continue;
      }
    }
    if (trimmed.starts_with('|')) {
      line.kind = LineKind::kTable;
      continue;
    }
    if (IsBoldHeadingText(trimmed)) {
      line.kind = LineKind::kBoldHeading;
      continue;
    }
    line.kind = LineKind::kText;
    std::size_t content_begin = indent;
    if (std::size_t m = ListMarkerEnd(raw, indent, line.end); m != std::string_view::npos) {
      line.list_item = true;
      content_begin = m;
    } else if (raw[indent] == '>') {
      content_begin = SkipIndent(raw, indent + 1, line.end);
    }
    line.content_begin = content_begin;
  }
  // Pipe-less tables: "a | b" followed by a separator row.
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    if (lines[i].kind != LineKind::kText) continue;
    const std::string_view cur = raw.substr(lines[i].begin, lines[i].end - lines[i].begin);
    const std::string_view next = raw.substr(lines[i + 1].begin, lines[i + 1].end - lines[i + 1].begin);
    if (cur.find('|') == std::string_view::npos || !IsSeparatorRow(next) ||
        next.find('|') == std::string_view::npos) {
      continue;
    }
    std::size_t j = i;
    while (j < lines.size() && (lines[j].kind == LineKind::kText || lines[j].kind == LineKind::kTable) &&
           raw.substr(lines[j].begin, lines[j].end - lines[j].begin).find('|') != std::string_view::npos) {
      lines[j].kind = LineKind::kTable;
      ++j;
    }
    i = j;
  }

  // Pass 2: sections and reference sections.
  std::vector<std::size_t> heading_idx;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].kind == LineKind::kHeading) heading_idx.push_back(i);
  }
  for (std::size_t h = 0; h < heading_idx.size(); ++h) {
    const Line& hl = lines[heading_idx[h]];
    const std::size_t body_begin = heading_idx[h] + 1 < lines.size() ? lines[heading_idx[h] + 1].begin : raw.size();
    const std::size_t body_end = h + 1 < heading_idx.size() ? lines[heading_idx[h + 1]].begin : raw.size();
    Section sec;
    sec.level = hl.heading_level;
    sec.title_span = hl.heading_title;
    sec.title = std::string(hl.heading_title.of(raw));
    sec.body_span = {std::min(body_begin, body_end), body_end};
    report.sections.push_back(sec);

    if (!IsReferenceSectionTitle(sec.title)) continue;
    ReferenceSection rs;
    rs.title = sec.title;
    rs.title_span = sec.title_span;
    rs.body_span = sec.body_span;
    const std::size_t last = h + 1 < heading_idx.size() ? heading_idx[h + 1] : lines.size();
    for (std::size_t i = heading_idx[h] + 1; i < last; ++i) {
      Line& l = lines[i];
      l.in_references = true;
      if (l.kind != LineKind::kText) continue;
      if (auto entry = ParseReferenceLine(raw, l)) rs.entries.push_back(std::move(*entry));
    }
    report.reference_sections.push_back(std::move(rs));
  }

  // Tables.
  for (std::size_t i = 0; i < lines.size();) {
    if (lines[i].kind != LineKind::kTable) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < lines.size() && lines[j].kind == LineKind::kTable) ++j;
    TableBlock tb;
    tb.span = {lines[i].begin, lines[j - 1].end};
    auto row = [&](std::size_t k) { return raw.substr(lines[k].begin, lines[k].end - lines[k].begin); };
    tb.columns = CountCells(row(i));
    const bool has_sep = j - i >= 2 && IsSeparatorRow(row(i + 1));
    bool equal = true;
    for (std::size_t k = i; k < j; ++k) {
      if (has_sep && k == i + 1) {
        if (CountCells(row(k)) != tb.columns) equal = false;
        continue;
      }
      ++tb.rows;
      if (CountCells(row(k)) != tb.columns) equal = false;
    }
    tb.syntactically_valid = has_sep && equal;
    report.tables.push_back(tb);
    i = j;
  }

  for (const auto& l : lines) {
    if (l.kind == LineKind::kBoldHeading && !l.in_references) {
      report.bold_pseudo_headings.push_back(TrimSpan(raw, {l.begin, l.end}));
    }
  }

  // Pass 3: inline citations (body text and table cells outside references).
  InlineScan scan;
  for (const auto& l : lines) {
    if (l.in_references) continue;
    if (l.kind == LineKind::kText || l.kind == LineKind::kTable || l.kind == LineKind::kBoldHeading) {
      ScanInline(raw, l.begin, l.end, scan);
    }
  }
  std::stable_sort(scan.citations.begin(), scan.citations.end(),
                   [](const InlineCitation& a, const InlineCitation& b) { return a.span.begin < b.span.begin; });
  report.inline_citations = scan.citations;
  std::sort(scan.protected_spans.begin(), scan.protected_spans.end());

  auto inside_protected = [&](std::size_t pos) {
    auto it = std::upper_bound(scan.protected_spans.begin(), scan.protected_spans.end(), Span{pos, SIZE_MAX});
    if (it == scan.protected_spans.begin()) return false;
    --it;
    return it->begin <= pos && pos < it->end;
  };
  auto citation_at = [&](std::size_t pos) -> const InlineCitation* {
    for (const auto& c : report.inline_citations) {
      if (c.span.begin == pos) return &c;
      if (c.span.begin > pos) break;
    }
    return nullptr;
  };

  // Pass 4: paragraphs -> sentences -> claims.
  std::vector<Paragraph> paragraphs;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const Line& l = lines[i];
    if (l.kind != LineKind::kText || l.in_references) continue;
    const bool continues = !paragraphs.empty() && i > 0 && lines[i - 1].kind == LineKind::kText &&
                           !lines[i - 1].in_references && !l.list_item;
    if (continues) {
      paragraphs.back().end = l.end;
    } else {
      paragraphs.push_back({l.content_begin, l.end});
    }
  }

  for (const auto& para : paragraphs) {
    // Sentence boundaries.
    std::vector<Span> sentences;
    std::size_t start = para.begin;
    int depth = 0;
    for (std::size_t p = para.begin; p < para.end; ++p) {
      if (inside_protected(p)) continue;
      const char c = raw[p];
      if (c == '(' || c == '[') ++depth;
      if ((c == ')' || c == ']') && depth > 0) --depth;
      if (depth > 0 || (c != '.' && c != '!' && c != '?')) continue;
      std::size_t q = p + 1;
      while (q < para.end && (raw[q] == '"' || raw[q] == '\'' || raw[q] == ')' || raw[q] == '*' || raw[q] == '_'))
        ++q;
      if (q < para.end && !IsSpace(raw[q])) {
        const InlineCitation* glued = citation_at(q);
        if (!glued || glued->kind == InlineCitation::Kind::kBareUrl) continue;
      }
      if (c == '.' && EndsWithAbbreviation(raw, start, p)) continue;
      // A citation cluster right after the terminator belongs to this sentence.
      std::size_t r = q;
      std::size_t absorbed = q;
      while (true) {
        std::size_t s = r;
        while (s < para.end && (raw[s] == ' ' || raw[s] == '\t' || raw[s] == ',')) ++s;
        const InlineCitation* cit = s < para.end ? citation_at(s) : nullptr;
        if (!cit || cit->kind == InlineCitation::Kind::kBareUrl) break;
        r = cit->span.end;
        absorbed = r;
        if (r < para.end && raw[r] == '.') absorbed = ++r;
      }
      if (absorbed < para.end && !IsSpace(raw[absorbed])) absorbed = q;
      sentences.push_back({start, absorbed});
      start = absorbed;
      p = absorbed - 1;
    }
    if (start < para.end) sentences.push_back({start, para.end});

    std::vector<ClaimUnit> claims;
    for (Span s : sentences) {
      s = TrimSpan(raw, s);
      if (s.empty()) continue;
      ClaimUnit claim;
      claim.span = s;
      for (const auto& c : report.inline_citations) {
        if (s.contains(c.span) &&
            std::find(claim.attached_keys.begin(), claim.attached_keys.end(), c.key) == claim.attached_keys.end()) {
          claim.attached_keys.push_back(c.key);
        }
      }
      // Text outside citations.
      std::string bare;
      for (std::size_t p = s.begin; p < s.end;) {
        const InlineCitation* cit = citation_at(p);
        if (cit && cit->span.end <= s.end && cit->kind == InlineCitation::Kind::kNumberedBracket) {
          p = cit->span.end;
          continue;
        }
        bare.push_back(raw[p++]);
      }
      if (!HasWordChar(bare)) {
        // A lone cluster merges into the previous sentence of the paragraph.
        if (!claims.empty()) {
          claims.back().span.end = s.end;
          for (auto& k : claim.attached_keys) {
            if (std::find(claims.back().attached_keys.begin(), claims.back().attached_keys.end(), k) ==
                claims.back().attached_keys.end()) {
              claims.back().attached_keys.push_back(k);
            }
          }
        }
        continue;
      }
      claims.push_back(std::move(claim));
    }
    if (claims.empty()) continue;

    // Paragraph-tail cluster: citations ending the final sentence with no
    // words after them.
    const ClaimUnit& last = claims.back();
    std::vector<CitationKey> tail;
    {
      std::size_t p = last.span.end;
      while (p > last.span.begin && (IsSpace(raw[p - 1]) || raw[p - 1] == '.' || raw[p - 1] == ',' ||
                                     raw[p - 1] == ';' || raw[p - 1] == '!' || raw[p - 1] == '?')) {
        --p;
      }
      std::vector<const InlineCitation*> cluster;
      while (p > last.span.begin) {
        const InlineCitation* hit = nullptr;
        for (const auto& c : report.inline_citations) {
          if (c.span.end == p && last.span.contains(c.span) && c.kind != InlineCitation::Kind::kBareUrl) {
            hit = &c;
          }
        }
        if (!hit) break;
        // All citations sharing that bracket span.
        for (const auto& c : report.inline_citations) {
          if (c.span == hit->span) cluster.push_back(&c);
        }
        p = hit->span.begin;
        while (p > last.span.begin && (raw[p - 1] == ' ' || raw[p - 1] == ',' || raw[p - 1] == '\t')) --p;
      }
      std::sort(cluster.begin(), cluster.end(),
                [](const InlineCitation* a, const InlineCitation* b) { return a->span.begin < b->span.begin; });
      for (const auto* c : cluster) {
        if (std::find(tail.begin(), tail.end(), c->key) == tail.end()) tail.push_back(c->key);
      }
    }
    if (!tail.empty()) {
      for (std::size_t i = 0; i + 1 < claims.size(); ++i) {
        if (claims[i].attached_keys.empty()) {
          claims[i].attached_keys = tail;
          claims[i].inherited = true;
        }
      }
    }
    for (auto& c : claims) {
      c.text = std::string(c.span.of(raw));
      report.claim_units.push_back(std::move(c));
    }
  }
  return report;
}

std::vector<ClaimCitations> ExtractClaimCitationPairs(const ParsedReport& report) {
  std::map<int, const ReferenceEntry*> by_number;
  for (const auto* e : report.all_references()) {
    if (e->number) by_number.emplace(*e->number, e);
  }
  std::vector<ClaimCitations> out;
  for (const auto& claim : report.claim_units) {
    if (claim.attached_keys.empty()) continue;
    ClaimCitations cc;
    cc.claim = claim;
    auto add_url = [&](const std::string& url) {
      if (std::find(cc.urls.begin(), cc.urls.end(), url) == cc.urls.end()) cc.urls.push_back(url);
    };
    for (const auto& key : claim.attached_keys) {
      if (const int* n = std::get_if<int>(&key)) {
        auto it = by_number.find(*n);
        if (it != by_number.end() && it->second->url) {
          add_url(*it->second->url);
        } else if (std::find(cc.unresolved_numbers.begin(), cc.unresolved_numbers.end(), *n) ==
                   cc.unresolved_numbers.end()) {
          cc.unresolved_numbers.push_back(*n);
        }
      } else {
        add_url(std::get<std::string>(key));
      }
    }
    out.push_back(std::move(cc));
  }
  return out;
}

}  // namespace deepeval
