// SPDX-License-Identifier: Apache-2.0
#include "frameagent/parse.hpp"

#include <cctype>
#include <charconv>
#include <optional>

#include "frameagent/errors.hpp"
#include "frameagent/literal.hpp"

namespace frameagent {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<long long> digits_prefix(std::string_view s, std::size_t& used) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || v < 0) return std::nullopt;
  used = static_cast<std::size_t>(ptr - s.data());
  return v;
}

// Integer, integral float, or a string that starts with an integer ("4",
// "4. C first rolled..."); anything alphanumeric glued to the digits fails.
std::optional<long long> leading_index(const nlohmann::json& v) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= -1e15 && d <= 1e15 && d == static_cast<double>(static_cast<long long>(d))) {
      return static_cast<long long>(d);
    }
    return std::nullopt;
  }
  if (!v.is_string()) return std::nullopt;
  const auto s = trim(v.get_ref<const std::string&>());
  std::size_t used = 0;
  const auto n = digits_prefix(s, used);
  if (!n || used == 0) return std::nullopt;
  if (used < s.size() && std::isalnum(static_cast<unsigned char>(s[used]))) return std::nullopt;
  return n;
}

// Whole-value integer: 2 or "2", nothing else.
std::optional<long long> exact_index(const nlohmann::json& v) {
  if (v.is_number_integer()) return v.get<long long>();
  if (!v.is_string()) return std::nullopt;
  const auto s = trim(v.get_ref<const std::string&>());
  std::size_t used = 0;
  const auto n = digits_prefix(s, used);
  if (!n || used != s.size() || s.empty()) return std::nullopt;
  return n;
}

std::string rationale_before(std::string_view raw, std::size_t literal_begin) {
  auto head = trim(raw.substr(0, literal_begin));
  // Drop an opening code fence ("```" or "```json") directly before the literal.
  const auto fence = head.rfind("```");
  if (fence != std::string_view::npos) {
    const auto tail = trim(head.substr(fence + 3));
    bool word = true;
    for (char c : tail) word = word && std::isalpha(static_cast<unsigned char>(c));
    if (word && tail.find('\n') == std::string_view::npos) {
      head = trim(head.substr(0, fence));
    }
  }
  return std::string(head);
}

}  // namespace

AnswerParse parse_answer(std::string_view raw, int num_options) {
  const auto match = find_last_map_with_key(raw, "final_answer");
  if (!match) {
    throw ParseError(ParseErrorKind::NoLiteral, "no final_answer literal in model output");
  }
  const auto index = leading_index(match->value["final_answer"]);
  if (!index) {
    throw ParseError(ParseErrorKind::BadValue, "final_answer is not an option index");
  }
  if (*index < 0 || *index >= num_options) {
    throw ParseError(ParseErrorKind::OutOfRange,
                     "final_answer " + std::to_string(*index) + " outside 0.." +
                         std::to_string(num_options - 1));
  }
  return {static_cast<int>(*index), rationale_before(raw, match->begin)};
}

Confidence parse_confidence(std::string_view raw) {
  const auto match = find_last_map_with_key(raw, "confidence");
  if (!match) {
    throw ParseError(ParseErrorKind::NoLiteral, "no confidence literal in model output");
  }
  const auto value = leading_index(match->value["confidence"]);
  if (!value) {
    throw ParseError(ParseErrorKind::BadValue, "confidence is not an integer level");
  }
  if (*value < 1 || *value > 3) {
    throw ParseError(ParseErrorKind::OutOfRange,
                     "confidence " + std::to_string(*value) + " not in {1, 2, 3}");
  }
  return static_cast<Confidence>(*value);
}

RetrievalPlan parse_plan(std::string_view raw, std::span<const Segment> segments, std::size_t cap) {
  const auto match = find_last_map_with_key(raw, "frame_descriptions");
  if (!match) {
    throw ParseError(ParseErrorKind::NoLiteral, "no frame_descriptions literal in model output");
  }
  const auto& list = match->value["frame_descriptions"];
  if (!list.is_array()) {
    throw ParseError(ParseErrorKind::BadValue, "frame_descriptions is not a list");
  }

  std::vector<int> live;
  for (const auto& seg : segments) {
    if (!seg.empty()) live.push_back(seg.id);
  }
  const auto is_live = [&](long long id) {
    for (int l : live) {
      if (l == id) return true;
    }
    return false;
  };

  RetrievalPlan plan;
  for (const auto& item : list) {
    if (plan.items.size() >= cap) break;
    if (!item.is_object() || !item.contains("description") || !item["description"].is_string()) {
      continue;
    }
    const auto description = trim(item["description"].get_ref<const std::string&>());
    if (description.empty()) continue;

    std::optional<long long> id;
    if (item.contains("segment_id")) {
      id = exact_index(item["segment_id"]);
    } else if (live.size() == 1) {
      id = live.front();
    }
    if (!id || !is_live(*id)) continue;
    plan.items.push_back({static_cast<int>(*id), std::string(description)});
  }
  return plan;
}

}  // namespace frameagent
