#include "deepeval/html_text.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

namespace deepeval {
namespace {

constexpr std::array<std::string_view, 7> kSkipped = {"script", "style", "noscript", "template", "svg", "head", "iframe"};
constexpr std::array<std::string_view, 28> kBlock = {
    "p",   "div", "br",  "li",      "ul",      "ol",     "h1",      "h2",     "h3",     "h4",
    "h5",  "h6",  "tr",  "table",   "section", "article", "header", "footer", "nav",    "main",
    "pre", "hr",  "dd",  "dt",      "blockquote", "figcaption", "caption", "aside"};

bool IsOneOf(std::string_view name, auto const& set) {
  return std::find(set.begin(), set.end(), name) != set.end();
}

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

void AppendUtf8(std::string& out, unsigned long cp) {
  if (cp == 0 || cp > 0x10FFFF) cp = 0xFFFD;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::string DecodeEntities(std::string_view s) {
  static constexpr std::pair<std::string_view, std::string_view> kNamed[] = {
      {"amp", "&"},  {"lt", "<"},       {"gt", ">"},       {"quot", "\""},   {"apos", "'"},
      {"nbsp", " "}, {"mdash", "—"}, {"ndash", "–"}, {"hellip", "…"}, {"copy", "©"},
      {"rsquo", "’"}, {"lsquo", "‘"}, {"rdquo", "”"}, {"ldquo", "“"}, {"euro", "€"}};
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    const std::size_t semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out += '&';
      continue;
    }
    const std::string_view name = s.substr(i + 1, semi - i - 1);
    bool done = false;
    if (!name.empty() && name[0] == '#') {
      try {
        const bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
        const std::string digits(name.substr(hex ? 2 : 1));
        std::size_t used = 0;
        const unsigned long cp = std::stoul(digits, &used, hex ? 16 : 10);
        if (used == digits.size()) {
          AppendUtf8(out, cp);
          done = true;
        }
      } catch (const std::exception&) {
      }
    } else {
      for (const auto& [n, v] : kNamed) {
        if (n == name) {
          out += v;
          done = true;
          break;
        }
      }
    }
    if (done) {
      i = semi;
    } else {
      out += '&';
    }
  }
  return out;
}

// Collapses whitespace runs to single spaces and trims.
std::string Squash(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (IsSpace(c)) {
      space = !out.empty();
    } else {
      if (space) out += ' ';
      space = false;
      out += c;
    }
  }
  return out;
}

}  // namespace

PageText HtmlToText(std::string_view html) {
  PageText page;
  std::vector<std::string> lines;
  std::string current;
  std::string title_raw;
  bool in_title = false;
  std::string skipping;  // name of the element whose content is dropped

  auto flush = [&] {
    std::string line = Squash(DecodeEntities(current));
    if (!line.empty()) lines.push_back(std::move(line));
    current.clear();
  };

  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      const std::size_t next = html.find('<', i);
      const std::string_view chunk = html.substr(i, next == std::string_view::npos ? std::string_view::npos : next - i);
      if (in_title) {
        title_raw += chunk;
      } else if (skipping.empty()) {
        current += chunk;
      }
      i = next == std::string_view::npos ? html.size() : next;
      continue;
    }
    if (html.substr(i, 4) == "<!--") {
      const std::size_t end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? html.size() : end + 3;
      continue;
    }
    const std::size_t close = html.find('>', i);
    if (close == std::string_view::npos) break;
    std::string_view tag = html.substr(i + 1, close - i - 1);
    i = close + 1;
    const bool end_tag = !tag.empty() && tag[0] == '/';
    if (end_tag) tag.remove_prefix(1);
    std::size_t name_len = 0;
    while (name_len < tag.size() && (std::isalnum(static_cast<unsigned char>(tag[name_len])))) ++name_len;
    std::string name(tag.substr(0, name_len));
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    if (name.empty()) continue;

    if (name == "title") {
      in_title = !end_tag;
      continue;
    }
    if (!skipping.empty()) {
      if (end_tag && name == skipping) skipping.clear();
      continue;
    }
    const bool self_closing = !tag.empty() && tag.back() == '/';
    if (!end_tag && !self_closing && IsOneOf(name, kSkipped)) {
      // <head> is skipped except for <title>, handled above.
      if (name != "head") skipping = name;
      continue;
    }
    if (IsOneOf(name, kBlock)) {
      flush();
    } else if (name == "td" || name == "th") {
      if (!end_tag && !current.empty()) current += " | ";
    }
  }
  flush();
  page.title = Squash(DecodeEntities(title_raw));
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (k) page.text += '\n';
    page.text += lines[k];
  }
  return page;
}

std::string WordPrefix(std::string_view text, std::size_t max_words) {
  std::size_t words = 0;
  std::size_t i = 0;
  std::size_t end = 0;
  while (i < text.size() && words < max_words) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    if (i == text.size()) break;
    while (i < text.size() && !IsSpace(text[i])) ++i;
    ++words;
    end = i;
  }
  return std::string(text.substr(0, end));
}

}  // namespace deepeval
