// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "frameagent/assets.hpp"

namespace frameagent {

class Captioner;

using CaptionMap = std::map<FrameIndex, std::string>;

/// What the agent knows after t rounds: captions of every seen frame (kept
/// sorted by index), plus the latest prediction and its reasoning.
///
/// A value type; the update operations return new states.
class AgentState {
 public:
  AgentState(int frame_count, CaptionMap captions, int round = 1);

  int frame_count() const noexcept { return frame_count_; }
  const CaptionMap& captions() const noexcept { return captions_; }
  std::vector<FrameIndex> seen() const;
  std::size_t seen_count() const noexcept { return captions_.size(); }
  bool has_seen(FrameIndex frame) const { return captions_.contains(frame); }

  int round() const noexcept { return round_; }
  const std::optional<int>& last_prediction() const noexcept { return last_prediction_; }
  const std::optional<std::string>& last_rationale() const noexcept { return last_rationale_; }

  AgentState with_prediction(int answer, std::string rationale) const;
  AgentState next_round() const;

  friend bool operator==(const AgentState&, const AgentState&) = default;

 private:
  int frame_count_;
  CaptionMap captions_;
  int round_;
  std::optional<int> last_prediction_;
  std::optional<std::string> last_rationale_;
};

/// floor(1 + (L-1) k / (N-1)) for k = 0..N-1. Requires 2 <= N <= L.
std::vector<FrameIndex> uniform_sample(int frame_count, int count);

/// Captions the uniform sample and returns the round-1 state.
AgentState init_state(const VideoAssets& assets, int count, Captioner& captioner,
                      int caption_window = 0);

/// Adds new captions; for frames already seen the existing caption is kept.
/// Throws PreconditionError on indices outside 1..L.
AgentState merge(const AgentState& state, const CaptionMap& fresh);

/// `{'frame 1': 'caption', ...}` in ascending index order. Single quotes
/// inside captions are doubled. A non-zero `caption_char_cap` truncates each
/// caption to at most that many bytes on a UTF-8 boundary.
std::string render_caption_map(const AgentState& state, std::size_t caption_char_cap = 0);

}  // namespace frameagent
