// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "frameagent/retrieval.hpp"

namespace frameagent {

/// Self-assessed sufficiency of the current information.
enum class Confidence : int {
  Insufficient = 1,
  Partial = 2,
  Sufficient = 3,
};

inline int level(Confidence c) noexcept { return static_cast<int>(c); }

struct AnswerParse {
  int index = 0;
  std::string rationale;  // text preceding the answer literal
  friend bool operator==(const AnswerParse&, const AnswerParse&) = default;
};

/// Reads the last `{'final_answer': ...}` literal. The value may be an
/// integer or a string starting with one. Throws ParseError when no literal
/// is found, the value is not an index, or it is outside [0, num_options).
AnswerParse parse_answer(std::string_view raw, int num_options);

/// Reads the last `{'confidence': ...}` literal; the value must be 1, 2 or 3.
Confidence parse_confidence(std::string_view raw);

/// Reads the last `{'frame_descriptions': [...]}` literal and keeps the
/// (segment_id, description) pairs that target a live non-empty segment, up
/// to `cap` items in order. An item without a segment id is assigned to the
/// only live segment when exactly one exists. Throws ParseError when no list
/// is found.
RetrievalPlan parse_plan(std::string_view raw, std::span<const Segment> segments, std::size_t cap);

}  // namespace frameagent
