// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>

#include "frameagent/assets.hpp"
#include "frameagent/http.hpp"

namespace frameagent {

struct CaptionRequest {
  FrameIndex frame_index = 1;
  int window = 0;  // half-width in frames for clip captioners; 0 = single frame

  /// [first, last] frames covered by the window, clipped to 1..frame_count.
  std::pair<FrameIndex, FrameIndex> clipped_range(int frame_count) const;
};

/// Turns a frame index into text. Implementations must tolerate concurrent
/// calls.
class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual std::string describe(const VideoAssets& assets, const CaptionRequest& request) = 0;
};

/// Validates the request, calls the backend, and rejects empty output.
std::string caption(Captioner& backend, const VideoAssets& assets, const CaptionRequest& request);

/// Serves the precomputed caption rows of the bundle; the window is ignored.
class StoreCaptioner final : public Captioner {
 public:
  std::string describe(const VideoAssets& assets, const CaptionRequest& request) override;
};

/// On-demand captioning service:
///   POST {"video_id": str, "frame_index": int, "window": int} -> {"caption": str}
class HttpCaptioner final : public Captioner {
 public:
  explicit HttpCaptioner(std::string url, RetryPolicy retry = {});
  std::string describe(const VideoAssets& assets, const CaptionRequest& request) override;

 private:
  std::string url_;
  RetryPolicy retry_;
};

}  // namespace frameagent
