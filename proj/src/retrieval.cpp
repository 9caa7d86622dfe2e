// SPDX-License-Identifier: Apache-2.0
#include "frameagent/retrieval.hpp"

#include <algorithm>
#include <set>

#include "frameagent/errors.hpp"

namespace frameagent {

namespace {

void check_seen(std::span<const FrameIndex> seen, int frame_count) {
  if (seen.empty() || seen.front() != 1 || seen.back() != frame_count) {
    throw PreconditionError("seen frames must include both endpoints 1 and " +
                            std::to_string(frame_count));
  }
  if (std::adjacent_find(seen.begin(), seen.end(), std::greater_equal<>()) != seen.end()) {
    throw PreconditionError("seen frames must be strictly increasing");
  }
}

std::vector<FrameIndex> open_range(FrameIndex lo, FrameIndex hi) {
  std::vector<FrameIndex> out;
  for (FrameIndex f = lo + 1; f < hi; ++f) out.push_back(f);
  return out;
}

}  // namespace

std::vector<Segment> partition_segments(std::span<const FrameIndex> seen, int frame_count) {
  check_seen(seen, frame_count);
  std::vector<Segment> out;
  out.reserve(seen.size() - 1);
  for (std::size_t i = 0; i + 1 < seen.size(); ++i) {
    out.push_back({static_cast<int>(i + 1), seen[i], seen[i + 1], open_range(seen[i], seen[i + 1])});
  }
  return out;
}

Segment whole_video_segment(std::span<const FrameIndex> seen, int frame_count) {
  check_seen(seen, frame_count);
  Segment s{1, 1, frame_count, {}};
  auto it = seen.begin();
  for (FrameIndex f = 2; f < frame_count; ++f) {
    while (it != seen.end() && *it < f) ++it;
    if (it == seen.end() || *it != f) s.candidates.push_back(f);
  }
  return s;
}

std::vector<Segment> plan_targets(std::span<const FrameIndex> seen, int frame_count,
                                  bool segment_selection) {
  if (segment_selection) return partition_segments(seen, frame_count);
  return {whole_video_segment(seen, frame_count)};
}

FrameIndex retrieve_in_segment(const VideoAssets& assets, const Segment& segment,
                               std::span<const float> query) {
  if (segment.empty()) {
    throw PreconditionError("segment " + std::to_string(segment.id) + " has no candidate frames");
  }
  if (query.size() != assets.dim()) {
    throw PreconditionError("query dimension " + std::to_string(query.size()) +
                            " does not match bundle dimension " + std::to_string(assets.dim()));
  }
  FrameIndex best = 0;
  double best_score = 0.0;
  for (FrameIndex frame : segment.candidates) {
    const auto row = assets.embedding(frame);
    double score = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      score += static_cast<double>(row[j]) * query[j];
    }
    // Strict comparison keeps the earliest (lowest) index on ties.
    if (best == 0 || score > best_score) {
      best = frame;
      best_score = score;
    }
  }
  return best;
}

Observation execute_plan(const VideoAssets& assets, const RetrievalPlan& plan,
                         std::span<const FrameIndex> seen, TextEmbedder& embedder,
                         bool segment_selection) {
  Observation obs;
  if (plan.items.empty()) return obs;

  const auto segments = plan_targets(seen, assets.frame_count(), segment_selection);
  std::vector<std::string> queries;
  for (const auto& item : plan.items) {
    if (item.segment_id < 1 || item.segment_id > static_cast<int>(segments.size()) ||
        segments[static_cast<std::size_t>(item.segment_id - 1)].empty()) {
      throw PreconditionError("plan targets segment " + std::to_string(item.segment_id) +
                              " which is not a live non-empty segment");
    }
    queries.push_back(item.query);
  }

  const auto vectors = embedder.embed(queries);
  if (vectors.size() != queries.size()) {
    throw BackendError("embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                       std::to_string(queries.size()) + " queries");
  }

  const std::set<FrameIndex> already(seen.begin(), seen.end());
  std::set<FrameIndex> taken;
  for (std::size_t i = 0; i < plan.items.size(); ++i) {
    Vector query;
    try {
      query = normalized(vectors[i]);
    } catch (const BackendError& e) {
      throw BackendError("query '" + queries[i] + "': " + e.what());
    }
    const auto& segment = segments[static_cast<std::size_t>(plan.items[i].segment_id - 1)];
    const auto frame = retrieve_in_segment(assets, segment, query);
    if (already.contains(frame) || !taken.insert(frame).second) continue;
    obs.retrieved.push_back({frame, plan.items[i].query});
  }
  return obs;
}

}  // namespace frameagent
