#pragma once

#include <string>
#include <string_view>

namespace deepeval {

struct PageText {
  std::string title;
  std::string text;  // one block per line
};

/// Readable text of an HTML document: headings, paragraphs, list items and
/// table cells, one block per line. Script, style and other non-content
/// elements are dropped and character references decoded.
PageText HtmlToText(std::string_view html);

/// Leading `max_words` whitespace-separated words of `text`, as a prefix
/// of `text` (original spacing kept).
std::string WordPrefix(std::string_view text, std::size_t max_words);

}  // namespace deepeval
