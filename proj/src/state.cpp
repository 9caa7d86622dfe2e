// SPDX-License-Identifier: Apache-2.0
#include "frameagent/state.hpp"

#include <cstdint>

#include "frameagent/captioner.hpp"
#include "frameagent/errors.hpp"

namespace frameagent {

AgentState::AgentState(int frame_count, CaptionMap captions, int round)
    : frame_count_(frame_count), captions_(std::move(captions)), round_(round) {}

std::vector<FrameIndex> AgentState::seen() const {
  std::vector<FrameIndex> out;
  out.reserve(captions_.size());
  for (const auto& [frame, _] : captions_) {
    out.push_back(frame);
  }
  return out;
}

AgentState AgentState::with_prediction(int answer, std::string rationale) const {
  auto next = *this;
  next.last_prediction_ = answer;
  next.last_rationale_ = std::move(rationale);
  return next;
}

AgentState AgentState::next_round() const {
  auto next = *this;
  ++next.round_;
  return next;
}

std::vector<FrameIndex> uniform_sample(int frame_count, int count) {
  if (count < 2 || count > frame_count) {
    throw PreconditionError("uniform_sample needs 2 <= N <= L, got N=" + std::to_string(count) +
                            " L=" + std::to_string(frame_count));
  }
  std::vector<FrameIndex> out;
  out.reserve(static_cast<std::size_t>(count));
  const std::int64_t span = frame_count - 1;
  const std::int64_t steps = count - 1;
  for (std::int64_t k = 0; k < count; ++k) {
    // Integer floor of 1 + span*k/steps; exact for all int inputs.
    out.push_back(static_cast<FrameIndex>(1 + span * k / steps));
  }
  return out;
}

AgentState init_state(const VideoAssets& assets, int count, Captioner& captioner, int caption_window) {
  CaptionMap captions;
  for (FrameIndex frame : uniform_sample(assets.frame_count(), count)) {
    try {
      captions.emplace(frame, caption(captioner, assets, {frame, caption_window}));
    } catch (const BackendError& e) {
      throw BackendError("captioning frame " + std::to_string(frame) + ": " + e.what());
    }
  }
  return AgentState(assets.frame_count(), std::move(captions), 1);
}

AgentState merge(const AgentState& state, const CaptionMap& fresh) {
  for (const auto& [frame, _] : fresh) {
    if (frame < 1 || frame > state.frame_count()) {
      throw PreconditionError("merge: frame " + std::to_string(frame) + " outside 1.." +
                              std::to_string(state.frame_count()));
    }
  }
  auto captions = state.captions();
  for (const auto& [frame, text] : fresh) {
    captions.emplace(frame, text);  // no-op when already present
  }
  AgentState next(state.frame_count(), std::move(captions), state.round());
  if (state.last_prediction()) {
    next = next.with_prediction(*state.last_prediction(), state.last_rationale().value_or(""));
  }
  return next;
}

namespace {

std::string_view truncate_utf8(std::string_view text, std::size_t cap) {
  if (cap == 0 || text.size() <= cap) return text;
  std::size_t end = cap;
  // Back off continuation bytes so a multi-byte sequence is not split.
  while (end > 0 && (static_cast<unsigned char>(text[end]) & 0xc0) == 0x80) {
    --end;
  }
  return text.substr(0, end);
}

}  // namespace

std::string render_caption_map(const AgentState& state, std::size_t caption_char_cap) {
  if (state.captions().empty()) {
    throw PreconditionError("cannot render the caption map of an empty state");
  }
  std::string out = "{";
  bool first = true;
  for (const auto& [frame, text] : state.captions()) {
    if (!first) out += ", ";
    first = false;
    out += "'frame ";
    out += std::to_string(frame);
    out += "': '";
    for (char c : truncate_utf8(text, caption_char_cap)) {
      if (c == '\'') out += '\'';
      out += c;
    }
    out += '\'';
  }
  out += '}';
  return out;
}

}  // namespace frameagent
