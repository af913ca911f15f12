#include "deepeval/json_extract.h"

namespace deepeval {
namespace {

using json = nlohmann::json;

std::optional<json> TryParseObject(std::string_view text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

// End of the balanced object starting at `open` (inclusive), or npos.
std::size_t BalancedEnd(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<json> ExtractJsonObject(std::string_view text) {
  if (auto whole = TryParseObject(text)) return whole;

  for (std::size_t pos = text.find("```"); pos != std::string_view::npos;) {
    const std::size_t body = text.find('\n', pos);
    if (body == std::string_view::npos) break;
    const std::size_t close = text.find("```", body);
    if (close == std::string_view::npos) break;
    if (auto fenced = TryParseObject(text.substr(body + 1, close - body - 1))) return fenced;
    pos = text.find("```", close + 3);
  }

  for (std::size_t open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
    const std::size_t end = BalancedEnd(text, open);
    if (end == std::string_view::npos) continue;
    if (auto obj = TryParseObject(text.substr(open, end - open + 1))) return obj;
  }
  return std::nullopt;
}

}  // namespace deepeval
