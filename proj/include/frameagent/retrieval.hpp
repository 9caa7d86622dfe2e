// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "frameagent/assets.hpp"
#include "frameagent/embedder.hpp"

namespace frameagent {

/// Unseen frames strictly between two consecutive seen frames.
struct Segment {
  int id = 0;  // 1-based ordinal within its partition
  FrameIndex lo = 0;
  FrameIndex hi = 0;
  std::vector<FrameIndex> candidates;

  bool empty() const noexcept { return candidates.empty(); }
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct PlanItem {
  int segment_id = 0;
  std::string query;
  friend bool operator==(const PlanItem&, const PlanItem&) = default;
};

struct RetrievalPlan {
  std::vector<PlanItem> items;
  friend bool operator==(const RetrievalPlan&, const RetrievalPlan&) = default;
};

struct RetrievedFrame {
  FrameIndex frame = 0;
  std::string query;
  friend bool operator==(const RetrievedFrame&, const RetrievedFrame&) = default;
};

struct Observation {
  std::vector<RetrievedFrame> retrieved;
  friend bool operator==(const Observation&, const Observation&) = default;
};

/// One segment per consecutive pair of seen frames, ids 1..|seen|-1.
/// `seen` must be strictly increasing and contain 1 and `frame_count`.
std::vector<Segment> partition_segments(std::span<const FrameIndex> seen, int frame_count);

/// The single segment used when segment selection is disabled: every
/// unseen frame of the video, bounded by frames 1 and L, with id 1.
Segment whole_video_segment(std::span<const FrameIndex> seen, int frame_count);

/// Segments a plan may target: the live partition, or the whole-video
/// segment when `segment_selection` is off.
std::vector<Segment> plan_targets(std::span<const FrameIndex> seen, int frame_count,
                                  bool segment_selection);

/// Candidate with the largest dot product against `query`; lowest index on
/// ties. `query` must have the bundle's dimension.
FrameIndex retrieve_in_segment(const VideoAssets& assets, const Segment& segment,
                               std::span<const float> query);

/// Embeds every plan query, retrieves one frame per item, and drops frames
/// already seen or already retrieved earlier in the plan.
Observation execute_plan(const VideoAssets& assets, const RetrievalPlan& plan,
                         std::span<const FrameIndex> seen, TextEmbedder& embedder,
                         bool segment_selection = true);

}  // namespace frameagent
