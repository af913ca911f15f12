#include "deepeval/url.h"

#include <algorithm>
#include <cctype>

namespace deepeval {
namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool IsSchemeChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
}

bool HasControlOrSpace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return u <= 0x20 || u == 0x7F;
  });
}

}  // namespace

std::string UrlParts::authority() const {
  std::string out;
  if (!userinfo.empty()) out += userinfo + "@";
  out += host;
  if (!port.empty()) out += ":" + port;
  return out;
}

std::string UrlParts::origin() const { return scheme + "://" + authority(); }

std::string UrlParts::path_and_query() const { return query.empty() ? path : path + "?" + query; }

std::string UrlParts::str() const { return origin() + path_and_query(); }

std::optional<UrlParts> ParseUrl(std::string_view url) {
  if (url.empty() || HasControlOrSpace(url)) return std::nullopt;
  const std::size_t colon = url.find("://");
  if (colon == std::string_view::npos || colon == 0) return std::nullopt;
  const std::string_view scheme = url.substr(0, colon);
  if (!std::isalpha(static_cast<unsigned char>(scheme[0])) ||
      !std::all_of(scheme.begin(), scheme.end(), IsSchemeChar)) {
    return std::nullopt;
  }

  std::string_view rest = url.substr(colon + 3);
  if (const auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);

  const std::size_t auth_end = rest.find_first_of("/?");
  std::string_view authority = rest.substr(0, auth_end);
  std::string_view tail = auth_end == std::string_view::npos ? std::string_view{} : rest.substr(auth_end);

  UrlParts parts;
  parts.scheme = Lower(scheme);
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
    parts.userinfo = std::string(authority.substr(0, at));
    authority = authority.substr(at + 1);
  }
  std::string_view host = authority;
  if (!host.empty() && host.front() == '[') {
    const auto close = host.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    std::string_view after = host.substr(close + 1);
    host = host.substr(0, close + 1);
    if (!after.empty()) {
      if (after.front() != ':') return std::nullopt;
      parts.port = std::string(after.substr(1));
    }
  } else if (const auto pc = host.rfind(':'); pc != std::string_view::npos) {
    parts.port = std::string(host.substr(pc + 1));
    host = host.substr(0, pc);
  }
  if (host.empty()) return std::nullopt;
  if (!std::all_of(parts.port.begin(), parts.port.end(),
                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return std::nullopt;
  }
  for (char c : host) {
    const auto u = static_cast<unsigned char>(c);
    if (!(std::isalnum(u) || c == '-' || c == '.' || c == '_' || c == '[' || c == ']' || c == ':' ||
          c == '%' || u >= 0x80)) {
      return std::nullopt;
    }
  }
  parts.host = Lower(host);

  const auto q = tail.find('?');
  std::string_view path = tail.substr(0, q);
  if (q != std::string_view::npos) parts.query = std::string(tail.substr(q + 1));
  parts.path = path.empty() ? "/" : std::string(path);
  return parts;
}

std::optional<std::string> NormalizeUrl(std::string_view url) {
  auto parts = ParseUrl(url);
  if (!parts) return std::nullopt;
  // Rebuild from the original text so an empty-but-present query ("a?")
  // keeps its '?' byte.
  const std::size_t colon = url.find("://");
  std::string_view rest = url.substr(colon + 3);
  if (const auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);
  const std::size_t auth_end = rest.find_first_of("/?");
  std::string_view tail = auth_end == std::string_view::npos ? std::string_view{} : rest.substr(auth_end);
  std::string out = parts->origin();
  if (tail.empty() || tail.front() == '?') out += '/';
  out += tail;
  return out;
}

}  // namespace deepeval
