// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "frameagent/retrieval.hpp"
#include "frameagent/state.hpp"

namespace frameagent {

enum class PromptKind { Predict, Reflect, Search };

std::string_view to_string(PromptKind kind);
std::optional<PromptKind> parse_prompt_kind(std::string_view name);

struct Question {
  std::string text;
  std::vector<std::string> options;
  friend bool operator==(const Question&, const Question&) = default;
};

/// Values substituted into a template. Rendering is a pure function of these.
struct PromptSlots {
  int frame_count = 0;
  int fps = 1;
  std::string caption_map;
  std::string question;
  std::vector<std::string> options;
  std::string rationale;            // reflect only
  std::size_t seen_count = 0;       // search only
  std::size_t segment_count = 0;    // search only
  std::vector<int> segment_ids;     // search only: non-empty segments
  bool segment_selection = true;    // search only
  friend bool operator==(const PromptSlots&, const PromptSlots&) = default;
};

struct PromptBundle {
  PromptKind kind;
  std::string text;
  PromptSlots slots;
};

struct RenderOptions {
  int fps = 1;
  std::size_t caption_char_cap = 0;  // 0 = no truncation
};

/// English word for small counts ("five"); larger values fall back to digits.
std::string spelled_number(std::size_t n);

/// Chain-of-thought answer prompt. Requires a non-empty state and 2-5 options.
PromptBundle render_predict_prompt(const AgentState& state, const Question& question,
                                   const RenderOptions& options = {});

/// Confidence prompt: the predict prompt, the model's reasoning for it, and
/// the three-level criteria. `rationale` must be non-empty.
PromptBundle render_reflect_prompt(const AgentState& state, const Question& question,
                                   int prediction, std::string_view rationale,
                                   const RenderOptions& options = {});

/// Missing-information prompt over the live partition. With
/// `segment_selection` off the segment structure is left out and items carry
/// only a description. Requires at least one non-empty segment.
PromptBundle render_search_prompt(const AgentState& state, const Question& question,
                                  std::span<const Segment> segments,
                                  const RenderOptions& options = {},
                                  bool segment_selection = true);

/// Text used when the model's output could not be parsed.
inline constexpr std::string_view kReaskSuffix = "Respond with only the JSON object.";

}  // namespace frameagent
