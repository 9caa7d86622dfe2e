// SPDX-License-Identifier: Apache-2.0
#include "frameagent/captioner.hpp"

#include <algorithm>
#include <json.hpp>

#include "frameagent/errors.hpp"

namespace frameagent {

std::pair<FrameIndex, FrameIndex> CaptionRequest::clipped_range(int frame_count) const {
  return {std::max(1, frame_index - window), std::min(frame_count, frame_index + window)};
}

std::string caption(Captioner& backend, const VideoAssets& assets, const CaptionRequest& request) {
  if (request.frame_index < 1 || request.frame_index > assets.frame_count()) {
    throw PreconditionError("caption request for frame " + std::to_string(request.frame_index) +
                            " outside 1.." + std::to_string(assets.frame_count()));
  }
  if (request.window < 0) {
    throw PreconditionError("caption window must be non-negative");
  }
  auto text = backend.describe(assets, request);
  if (text.empty()) {
    throw BackendError("empty caption for frame " + std::to_string(request.frame_index));
  }
  return text;
}

std::string StoreCaptioner::describe(const VideoAssets& assets, const CaptionRequest& request) {
  const auto idx = static_cast<std::size_t>(request.frame_index);
  if (request.frame_index < 1 || idx > assets.captions().size() ||
      assets.captions()[idx - 1].empty()) {
    throw BackendError("caption store miss at frame " + std::to_string(request.frame_index));
  }
  return assets.captions()[idx - 1];
}

HttpCaptioner::HttpCaptioner(std::string url, RetryPolicy retry)
    : url_(std::move(url)), retry_(retry) {}

std::string HttpCaptioner::describe(const VideoAssets& assets, const CaptionRequest& request) {
  const nlohmann::json body = {
      {"video_id", assets.video_id()},
      {"frame_index", request.frame_index},
      {"window", request.window},
  };
  const auto what = "caption endpoint (frame " + std::to_string(request.frame_index) + ")";
  int attempts = 0;
  return with_retries(
      retry_,
      [&] {
        const auto response = http_post_json(url_, body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
        raise_for_status(response, what);
        const auto parsed = nlohmann::json::parse(response.body, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("caption") ||
            !parsed["caption"].is_string()) {
          throw BackendError(what + ": response lacks a string \"caption\"");
        }
        return parsed["caption"].get<std::string>();
      },
      attempts);
}

}  // namespace frameagent
