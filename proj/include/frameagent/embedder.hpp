// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "frameagent/http.hpp"

namespace frameagent {

using Vector = std::vector<float>;

/// Text tower of the contrastive image-text model. Returned rows follow the
/// input order; they need not be normalized.
class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual std::vector<Vector> embed(const std::vector<std::string>& texts) = 0;
};

/// Unit-normalizes `v`; throws BackendError for zero or non-finite vectors.
Vector normalized(Vector v);

/// POST {"input": [...]} -> {"embeddings": [[...], ...]}
class HttpEmbedder final : public TextEmbedder {
 public:
  explicit HttpEmbedder(std::string url, RetryPolicy retry = {});
  std::vector<Vector> embed(const std::vector<std::string>& texts) override;

 private:
  std::string url_;
  RetryPolicy retry_;
};

/// Deterministic stand-in: a seeded hash of the text expanded into a vector.
class HashEmbedder final : public TextEmbedder {
 public:
  HashEmbedder(std::size_t dim, std::uint64_t seed);
  std::vector<Vector> embed(const std::vector<std::string>& texts) override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Precomputed query embeddings; unknown queries are a backend failure.
class TableEmbedder final : public TextEmbedder {
 public:
  explicit TableEmbedder(std::map<std::string, Vector> table);
  /// JSON object mapping query text to an array of numbers.
  static TableEmbedder from_file(const std::filesystem::path& path);
  std::vector<Vector> embed(const std::vector<std::string>& texts) override;

 private:
  std::map<std::string, Vector> table_;
};

}  // namespace frameagent
