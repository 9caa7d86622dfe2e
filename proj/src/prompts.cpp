// SPDX-License-Identifier: Apache-2.0
#include "frameagent/prompts.hpp"

#include <array>

#include "frameagent/errors.hpp"

namespace frameagent {

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::Predict:
      return "predict";
    case PromptKind::Reflect:
      return "reflect";
    case PromptKind::Search:
      return "search";
  }
  return "unknown";
}

std::optional<PromptKind> parse_prompt_kind(std::string_view name) {
  for (auto kind : {PromptKind::Predict, PromptKind::Reflect, PromptKind::Search}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

std::string spelled_number(std::size_t n) {
  static constexpr std::array<std::string_view, 20> kSmall = {
      "zero",    "one",     "two",       "three",    "four",     "five",    "six",
      "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
      "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen"};
  static constexpr std::array<std::string_view, 10> kTens = {
      "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};
  if (n < kSmall.size()) return std::string(kSmall[n]);
  if (n < 100) {
    std::string out(kTens[n / 10]);
    if (n % 10 != 0) {
      out += '-';
      out += kSmall[n % 10];
    }
    return out;
  }
  return std::to_string(n);
}

namespace {

constexpr std::string_view kAnswerInstruction =
    "Please think step-by-step and write the best answer index in Json format "
    "{'final_answer': 'xxx'}. Note that only one answer is returned for the question.";

constexpr std::string_view kConfidenceCriteria =
    "Criteria for Evaluation:\n"
    "Insufficient Information (Confidence Level: 1): If information is too lacking for a "
    "reasonable conclusion.\n"
    "Partial Information (Confidence Level: 2): If information partially supports an informed "
    "guess.\n"
    "Sufficient Information (Confidence Level: 3): If information fully supports a "
    "well-informed decision.\n"
    "Assessment Focus:\n"
    "Evaluate based on the relevance, completeness, and clarity of the provided information in "
    "relation to the decision-making context.\n"
    // The closing quote is U+2019, kept as it appears in the reference prompt.
    "Please generate the confidence with JSON format {'confidence': 'xxx’}";

constexpr std::string_view kFrameRelevance =
    "These frames should capture key visual elements, such as objects, humans, interactions, "
    "actions, and scenes, that are supportive to answer the question.";

std::string video_header(const PromptSlots& s, std::string_view frames_phrase) {
  return "Given a video that has " + std::to_string(s.frame_count) +
         " frames, the frames are decoded at " + std::to_string(s.fps) +
         " fps. Given the following descriptions of " + std::string(frames_phrase) +
         " in the video:\n" + s.caption_map + "\n";
}

std::string question_block(const PromptSlots& s) {
  std::string out = "```\n" + s.question + "\n";
  for (std::size_t i = 0; i < s.options.size(); ++i) {
    out += std::to_string(i) + ". " + s.options[i] + "\n";
  }
  out += "```\n";
  return out;
}

PromptSlots base_slots(const AgentState& state, const Question& question,
                       const RenderOptions& options) {
  if (state.captions().empty()) {
    throw PreconditionError("prompt needs at least one captioned frame");
  }
  if (question.options.size() < 2 || question.options.size() > 5) {
    throw PreconditionError("prompt needs 2 to 5 options, got " +
                            std::to_string(question.options.size()));
  }
  PromptSlots s;
  s.frame_count = state.frame_count();
  s.fps = options.fps;
  s.caption_map = render_caption_map(state, options.caption_char_cap);
  s.question = question.text;
  s.options = question.options;
  return s;
}

std::string predict_text(const PromptSlots& s) {
  return video_header(s, "the sampled frames") + "Please answer the following question:\n" +
         question_block(s) + std::string(kAnswerInstruction);
}

std::string reflect_text(const PromptSlots& s) {
  return "Please assess the confidence level in the decision-making process.\n"
         "The provided information is as as follows,\n" +
         predict_text(s) + "\nThe decision making process is as follows,\n" + s.rationale + "\n" +
         std::string(kConfidenceCriteria);
}

std::string search_text(const PromptSlots& s) {
  const auto seen = spelled_number(s.seen_count);
  std::string out = video_header(s, seen + " uniformly sampled frames") +
                    "To answer the following question:\n" + question_block(s) +
                    "However, the information in the initial " + seen + " frames is not suffient.\n" +
                    "Objective:\n"
                    "Our goal is to identify additional frames that contain crucial information "
                    "necessary for answering the question. These frames should not only address the "
                    "query directly but should also complement the insights gleaned from the "
                    "descriptions of the initial " +
                    seen + " frames.\n" + "To achieve this, we will:\n";

  if (!s.segment_selection) {
    out += "1. Determine which frames of the video are most relevant to the question. ";
    out += kFrameRelevance;
    out +=
        "\nFor each frame identified as potentially relevant, provide a concise description "
        "focusing on essential visual elements. Use a single sentence per frame. If the specifics "
        "of a frame's visual content are uncertain based on the current information, use "
        "placeholders for specific actions or objects, but ensure the description still conveys "
        "the frame's relevance to the query.\n"
        "```\n"
        "{'frame_descriptions': [{'description': 'frame of xxx'}, {'description': 'frame of xxx'}, "
        "{'description': 'frame of xxx'}]}";
    return out;
  }

  std::string ids;
  for (int id : s.segment_ids) {
    if (!ids.empty()) ids += '/';
    ids += std::to_string(id);
  }
  const std::string item = "{'segment_id': '" + ids +
                           "', 'duration': 'xxx - xxx', 'description': 'frame of xxx'}";
  out += "1. Divide the video into " + spelled_number(s.segment_count) +
         " segments based on the intervals between the initial " + seen + " frames.\n";
  out += "2. Determine which segments are likely to contain frames that are most relevant to the "
         "question. ";
  out += kFrameRelevance;
  out +=
      "\nFor each frame identified as potentially relevant, provide a concise description focusing "
      "on essential visual elements. Use a single sentence per frame. If the specifics of a "
      "segment's visual content are uncertain based on the current information, use placeholders "
      "for specific actions or objects, but ensure the description still conveys the segment's "
      "relevance to the query.\n"
      "Select multiple frames from one segment if necessary to gather comprehensive insights.\n"
      "```\n";
  out += "{'frame_descriptions': [" + item + ", " + item + ", " + item + "]}";
  return out;
}

}  // namespace

PromptBundle render_predict_prompt(const AgentState& state, const Question& question,
                                   const RenderOptions& options) {
  auto slots = base_slots(state, question, options);
  auto text = predict_text(slots);
  return {PromptKind::Predict, std::move(text), std::move(slots)};
}

PromptBundle render_reflect_prompt(const AgentState& state, const Question& question,
                                   int /*prediction*/, std::string_view rationale,
                                   const RenderOptions& options) {
  if (rationale.empty()) {
    throw PreconditionError("reflect prompt needs the prediction's reasoning");
  }
  auto slots = base_slots(state, question, options);
  slots.rationale = std::string(rationale);
  auto text = reflect_text(slots);
  return {PromptKind::Reflect, std::move(text), std::move(slots)};
}

PromptBundle render_search_prompt(const AgentState& state, const Question& question,
                                  std::span<const Segment> segments, const RenderOptions& options,
                                  bool segment_selection) {
  auto slots = base_slots(state, question, options);
  slots.seen_count = state.seen_count();
  slots.segment_count = segments.size();
  slots.segment_selection = segment_selection;
  for (const auto& seg : segments) {
    if (!seg.empty()) slots.segment_ids.push_back(seg.id);
  }
  if (slots.segment_ids.empty()) {
    throw PreconditionError("search prompt needs at least one segment with unseen frames");
  }
  auto text = search_text(slots);
  return {PromptKind::Search, std::move(text), std::move(slots)};
}

}  // namespace frameagent
