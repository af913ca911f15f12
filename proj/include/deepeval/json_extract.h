#pragma once

#include <optional>
#include <string_view>

#include <nlohmann/json.hpp>

namespace deepeval {

/// Pulls a JSON object out of free-form judge output: the whole text if it
/// parses, else the contents of a ``` fence, else the first balanced
/// top-level {...} that parses.
std::optional<nlohmann::json> ExtractJsonObject(std::string_view text);

}  // namespace deepeval
