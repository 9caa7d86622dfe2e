// SPDX-License-Identifier: Apache-2.0
#include "frameagent/embedder.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "frameagent/errors.hpp"

namespace frameagent {

Vector normalized(Vector v) {
  double sq = 0.0;
  for (float x : v) {
    if (!std::isfinite(x)) throw BackendError("embedding contains a non-finite value");
    sq += static_cast<double>(x) * x;
  }
  if (sq == 0.0) throw BackendError("embedding is the zero vector");
  const double inv = 1.0 / std::sqrt(sq);
  for (float& x : v) {
    x = static_cast<float>(x * inv);
  }
  return v;
}

HttpEmbedder::HttpEmbedder(std::string url, RetryPolicy retry) : url_(std::move(url)), retry_(retry) {}

std::vector<Vector> HttpEmbedder::embed(const std::vector<std::string>& texts) {
  const nlohmann::json body = {{"input", texts}};
  int attempts = 0;
  return with_retries(
      retry_,
      [&] {
        const auto response = http_post_json(url_, body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
        raise_for_status(response, "embedding endpoint");
        const auto parsed = nlohmann::json::parse(response.body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("embeddings") ||
            !parsed["embeddings"].is_array()) {
          throw BackendError("embedding endpoint: response lacks an \"embeddings\" array");
        }
        const auto& rows = parsed["embeddings"];
        if (rows.size() != texts.size()) {
          throw BackendError("embedding endpoint: returned " + std::to_string(rows.size()) +
                             " rows for " + std::to_string(texts.size()) + " queries");
        }
        std::vector<Vector> out;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (!rows[i].is_array()) {
            throw BackendError("embedding endpoint: row for query '" + texts[i] + "' is not an array");
          }
          Vector v;
          for (const auto& x : rows[i]) {
            if (!x.is_number()) {
              throw BackendError("embedding endpoint: non-numeric value for query '" + texts[i] + "'");
            }
            v.push_back(x.get<float>());
          }
          out.push_back(std::move(v));
        }
        return out;
      },
      attempts);
}

namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw PreconditionError("hash embedder dimension must be positive");
}

std::vector<Vector> HashEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::uint64_t state = fnv1a(text) ^ (seed_ * 0x9e3779b97f4a7c15ull);
    Vector v(dim_);
    for (auto& x : v) {
      const double unit = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
      x = static_cast<float>(2.0 * unit - 1.0);
    }
    out.push_back(normalized(std::move(v)));
  }
  return out;
}

TableEmbedder::TableEmbedder(std::map<std::string, Vector> table) : table_(std::move(table)) {}

TableEmbedder TableEmbedder::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BackendError("cannot open query embedding table " + path.string());
  const auto parsed = nlohmann::json::parse(in, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw BackendError("query embedding table must be a JSON object: " + path.string());
  }
  std::map<std::string, Vector> table;
  for (const auto& [query, row] : parsed.items()) {
    if (!row.is_array()) throw BackendError("table row for '" + query + "' is not an array");
    Vector v;
    for (const auto& x : row) {
      if (!x.is_number()) throw BackendError("table row for '" + query + "' has a non-number");
      v.push_back(x.get<float>());
    }
    table.emplace(query, std::move(v));
  }
  return TableEmbedder(std::move(table));
}

std::vector<Vector> TableEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    const auto it = table_.find(text);
    if (it == table_.end()) {
      throw BackendError("no precomputed embedding for query '" + text + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

}  // namespace frameagent
