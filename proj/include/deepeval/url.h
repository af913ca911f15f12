#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace deepeval {

struct UrlParts {
  std::string scheme;     // lowercase
  std::string userinfo;   // without trailing '@'
  std::string host;       // lowercase
  std::string port;       // digits, empty if absent
  std::string path;       // starts with '/', never empty
  std::string query;      // without leading '?'

  std::string authority() const;
  std::string origin() const;         // scheme://authority
  std::string path_and_query() const;
  std::string str() const;
};

/// Splits an absolute URL. Returns nullopt for relative or malformed input.
/// The fragment is dropped.
std::optional<UrlParts> ParseUrl(std::string_view url);

/// Canonical form used for citation grouping and cache keys: scheme and
/// host lowercased, fragment stripped, empty path becomes "/". Everything
/// else is preserved byte for byte. nullopt marks a normalization failure.
std::optional<std::string> NormalizeUrl(std::string_view url);

}  // namespace deepeval
