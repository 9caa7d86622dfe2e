// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace frameagent {

/// 1-based frame position in the 1 fps decode, so index k is roughly second k.
using FrameIndex = int;

inline constexpr double kNormTolerance = 1e-5;
inline constexpr char kCaptionFileName[] = "captions.tsv";
inline constexpr char kEmbeddingFileName[] = "embeddings.faem";

/// Per-video bundle of precomputed captions and unit-norm frame embeddings.
/// Immutable once constructed; construction does not validate, use
/// validate_assets() or load_assets() for that.
class VideoAssets {
 public:
  VideoAssets(std::string video_id, int frame_count, std::size_t dim,
              std::vector<std::string> captions, std::vector<float> embeddings);

  const std::string& video_id() const noexcept { return video_id_; }
  int frame_count() const noexcept { return frame_count_; }
  std::size_t dim() const noexcept { return dim_; }

  /// Throws PreconditionError when `frame` has no caption row.
  const std::string& caption(FrameIndex frame) const;
  /// Throws PreconditionError when `frame` has no embedding row.
  std::span<const float> embedding(FrameIndex frame) const;

  const std::vector<std::string>& captions() const noexcept { return captions_; }
  const std::vector<float>& embedding_data() const noexcept { return embeddings_; }

  friend bool operator==(const VideoAssets&, const VideoAssets&) = default;

 private:
  std::string video_id_;
  int frame_count_;
  std::size_t dim_;
  std::vector<std::string> captions_;  // row k-1 holds frame k
  std::vector<float> embeddings_;      // row-major, frame_count x dim
};

struct AssetViolation {
  enum class Kind {
    FrameCount,
    Dimension,
    CaptionCount,
    EmbeddingSize,
    EmptyCaption,
    InvalidUtf8,
    NonFinite,
    Norm,
  };
  Kind kind;
  FrameIndex frame;  // 0 when the violation is not tied to one frame
  std::string message;

  friend bool operator==(const AssetViolation&, const AssetViolation&) = default;
};

/// Every invariant breach in `assets`; empty means valid. Pure.
std::vector<AssetViolation> validate_assets(const VideoAssets& assets);

/// Parses the two bundle files under `dir` without checking norms or caption
/// content. Structural problems (missing file, bad header, truncated body,
/// caption gaps) throw AssetError naming the frame.
VideoAssets read_assets(const std::filesystem::path& dir);

/// read_assets() followed by validate_assets(); the first violation is thrown.
VideoAssets load_assets(const std::filesystem::path& dir);

/// Writes `assets` as a bundle under `dir` (created if needed).
void write_assets(const VideoAssets& assets, const std::filesystem::path& dir);

bool is_valid_utf8(std::string_view text);

}  // namespace frameagent
