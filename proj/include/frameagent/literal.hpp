// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <json.hpp>
#include <optional>
#include <string_view>

namespace frameagent {

/// A map literal located inside free text; [begin, end) spans its bytes.
struct LiteralMatch {
  nlohmann::json value;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Parses one JSON-or-Python-style literal starting at `pos`.
///
/// Accepted beyond strict JSON: single-quoted strings, typographic quotes
/// (U+2018/U+2019, U+201C/U+201D) as delimiters, bare identifier keys,
/// True/False/None, and trailing commas. Nesting deeper than 64 levels is
/// rejected. Never throws.
std::optional<LiteralMatch> parse_literal_at(std::string_view text, std::size_t pos);

/// The last (by start offset) map literal in `text` that has `key` at its top
/// level. Code fences or surrounding prose do not matter.
std::optional<LiteralMatch> find_last_map_with_key(std::string_view text, std::string_view key);

}  // namespace frameagent
