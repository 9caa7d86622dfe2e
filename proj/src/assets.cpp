// SPDX-License-Identifier: Apache-2.0
#include "frameagent/assets.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "frameagent/errors.hpp"

namespace frameagent {

namespace {

constexpr std::array<char, 4> kMagic = {'F', 'A', 'E', 'M'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kHeaderSize = 16;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw AssetError("missing file: " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t get_u32(const std::string& bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) {
    v = (v << 8) | static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(i)]);
  }
  return v;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
}

struct EmbeddingFile {
  int frame_count;
  std::size_t dim;
  std::vector<float> values;
};

EmbeddingFile parse_embeddings(const std::string& bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw AssetError("embedding header: bad magic (expected FAEM)");
  }
  const auto version = get_u32(bytes, 4);
  if (version != kFormatVersion) {
    throw AssetError("embedding header: unsupported version " + std::to_string(version));
  }
  const auto frames = get_u32(bytes, 8);
  const auto dim = get_u32(bytes, 12);
  if (frames == 0 || frames > 0x7fffffffu) {
    throw AssetError("embedding header: invalid frame count " + std::to_string(frames));
  }
  if (dim == 0) {
    throw AssetError("embedding header: dimension is zero");
  }
  const std::size_t row_bytes = std::size_t{dim} * 4;
  const std::size_t body = bytes.size() - kHeaderSize;
  if (body < row_bytes * frames) {
    throw AssetError("embedding body truncated at frame " + std::to_string(body / row_bytes + 1));
  }
  if (body > row_bytes * frames) {
    throw AssetError("embedding body has trailing bytes after frame " + std::to_string(frames));
  }
  EmbeddingFile out{static_cast<int>(frames), dim, {}};
  out.values.resize(std::size_t{frames} * dim);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = std::bit_cast<float>(get_u32(bytes, kHeaderSize + 4 * i));
  }
  return out;
}

std::vector<std::string> parse_captions(const std::string& text, int frame_count) {
  std::vector<std::string> captions;
  captions.reserve(static_cast<std::size_t>(frame_count));
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw AssetError("caption file line " + std::to_string(line_no) + ": missing tab separator");
    }
    FrameIndex index = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + tab, index);
    if (ec != std::errc{} || ptr != line.data() + tab) {
      throw AssetError("caption file line " + std::to_string(line_no) + ": bad frame index");
    }
    const FrameIndex expected = static_cast<FrameIndex>(captions.size()) + 1;
    if (index < expected) {
      throw AssetError("caption indices not strictly increasing at frame " + std::to_string(index));
    }
    if (index > expected && expected <= frame_count) {
      throw AssetError("caption gap at frame " + std::to_string(expected));
    }
    if (index > frame_count) {
      throw AssetError("caption for frame " + std::to_string(index) + " beyond frame count " +
                       std::to_string(frame_count));
    }
    captions.emplace_back(line.substr(tab + 1));
  }
  if (static_cast<int>(captions.size()) < frame_count) {
    throw AssetError("caption gap at frame " + std::to_string(captions.size() + 1));
  }
  return captions;
}

}  // namespace

VideoAssets::VideoAssets(std::string video_id, int frame_count, std::size_t dim,
                         std::vector<std::string> captions, std::vector<float> embeddings)
    : video_id_(std::move(video_id)),
      frame_count_(frame_count),
      dim_(dim),
      captions_(std::move(captions)),
      embeddings_(std::move(embeddings)) {}

const std::string& VideoAssets::caption(FrameIndex frame) const {
  if (frame < 1 || static_cast<std::size_t>(frame) > captions_.size()) {
    throw PreconditionError("no caption for frame " + std::to_string(frame));
  }
  return captions_[static_cast<std::size_t>(frame - 1)];
}

std::span<const float> VideoAssets::embedding(FrameIndex frame) const {
  const auto offset = static_cast<std::size_t>(frame - 1) * dim_;
  if (frame < 1 || dim_ == 0 || offset + dim_ > embeddings_.size()) {
    throw PreconditionError("no embedding for frame " + std::to_string(frame));
  }
  return {embeddings_.data() + offset, dim_};
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xe0) == 0xc0) {
      extra = 1;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      extra = 2;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= text.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    // Overlong forms, surrogates, and values past U+10FFFF.
    static constexpr std::uint32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return false;
    i += extra + 1;
  }
  return true;
}

std::vector<AssetViolation> validate_assets(const VideoAssets& assets) {
  using Kind = AssetViolation::Kind;
  std::vector<AssetViolation> report;
  const int frames = assets.frame_count();
  if (frames < 1) {
    report.push_back({Kind::FrameCount, 0, "frame count must be positive"});
    return report;
  }
  if (assets.dim() == 0) {
    report.push_back({Kind::Dimension, 0, "embedding dimension must be positive"});
  }
  if (assets.captions().size() != static_cast<std::size_t>(frames)) {
    report.push_back({Kind::CaptionCount, 0,
                      "caption count " + std::to_string(assets.captions().size()) +
                          " does not match frame count " + std::to_string(frames)});
  }
  if (assets.embedding_data().size() != static_cast<std::size_t>(frames) * assets.dim()) {
    report.push_back({Kind::EmbeddingSize, 0,
                      "embedding matrix holds " + std::to_string(assets.embedding_data().size()) +
                          " values, expected " + std::to_string(frames) + " x " +
                          std::to_string(assets.dim())});
  }

  for (std::size_t k = 0; k < assets.captions().size(); ++k) {
    const auto frame = static_cast<FrameIndex>(k + 1);
    const auto& text = assets.captions()[k];
    if (text.empty()) {
      report.push_back({Kind::EmptyCaption, frame, "empty caption at frame " + std::to_string(frame)});
    } else if (!is_valid_utf8(text)) {
      report.push_back({Kind::InvalidUtf8, frame, "invalid UTF-8 at frame " + std::to_string(frame)});
    }
  }

  if (assets.dim() == 0) return report;
  const auto& data = assets.embedding_data();
  const std::size_t rows = data.size() / assets.dim();
  for (std::size_t r = 0; r < rows; ++r) {
    const auto frame = static_cast<FrameIndex>(r + 1);
    double sq = 0.0;
    bool finite = true;
    for (std::size_t j = 0; j < assets.dim(); ++j) {
      const double v = data[r * assets.dim() + j];
      if (!std::isfinite(v)) {
        finite = false;
        break;
      }
      sq += v * v;
    }
    if (!finite) {
      report.push_back({Kind::NonFinite, frame,
                        "non-finite embedding value at frame " + std::to_string(frame)});
    } else if (std::abs(std::sqrt(sq) - 1.0) > kNormTolerance) {
      report.push_back({Kind::Norm, frame, "norm violation at frame " + std::to_string(frame)});
    }
  }
  return report;
}

VideoAssets read_assets(const std::filesystem::path& dir) {
  auto emb = parse_embeddings(read_file(dir / kEmbeddingFileName));
  auto captions = parse_captions(read_file(dir / kCaptionFileName), emb.frame_count);
  auto id = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
  return VideoAssets(std::move(id), emb.frame_count, emb.dim, std::move(captions), std::move(emb.values));
}

VideoAssets load_assets(const std::filesystem::path& dir) {
  auto assets = read_assets(dir);
  const auto report = validate_assets(assets);
  if (!report.empty()) {
    throw AssetError(report.front().message);
  }
  return assets;
}

void write_assets(const VideoAssets& assets, const std::filesystem::path& dir) {
  if (assets.embedding_data().size() != static_cast<std::size_t>(assets.frame_count()) * assets.dim() ||
      assets.captions().size() != static_cast<std::size_t>(assets.frame_count())) {
    throw AssetError("cannot write bundle with inconsistent shape");
  }
  std::filesystem::create_directories(dir);

  std::string captions;
  for (std::size_t k = 0; k < assets.captions().size(); ++k) {
    const auto& text = assets.captions()[k];
    if (text.find('\n') != std::string::npos) {
      throw AssetError("caption at frame " + std::to_string(k + 1) + " contains a newline");
    }
    captions += std::to_string(k + 1);
    captions += '\t';
    captions += text;
    captions += '\n';
  }

  std::string bytes(kMagic.begin(), kMagic.end());
  put_u32(bytes, kFormatVersion);
  put_u32(bytes, static_cast<std::uint32_t>(assets.frame_count()));
  put_u32(bytes, static_cast<std::uint32_t>(assets.dim()));
  bytes.reserve(bytes.size() + assets.embedding_data().size() * 4);
  for (float v : assets.embedding_data()) {
    put_u32(bytes, std::bit_cast<std::uint32_t>(v));
  }

  std::ofstream(dir / kCaptionFileName, std::ios::binary) << captions;
  std::ofstream(dir / kEmbeddingFileName, std::ios::binary) << bytes;
}

}  // namespace frameagent
