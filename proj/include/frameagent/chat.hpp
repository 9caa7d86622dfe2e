// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "frameagent/errors.hpp"
#include "frameagent/http.hpp"
#include "frameagent/prompts.hpp"

namespace frameagent {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct DecodingParams {
  double temperature = 0.0;
  std::optional<int> max_tokens;
  std::optional<std::int64_t> seed;
  friend bool operator==(const DecodingParams&, const DecodingParams&) = default;
};

struct ChatRequest {
  PromptKind kind = PromptKind::Predict;
  int round = 1;
  int reask = 0;        // 0 for the first ask, then 1..R_parse
  std::string context;  // caller tag, e.g. the video id; not sent to the model
  std::vector<ChatMessage> messages;
  DecodingParams params;
};

/// One model call as it happened, kept verbatim for replay.
struct ModelExchange {
  PromptKind kind = PromptKind::Predict;
  int round = 1;
  std::vector<ChatMessage> messages;
  DecodingParams params;
  std::string response;
  int attempts = 1;
  friend bool operator==(const ModelExchange&, const ModelExchange&) = default;
};

nlohmann::json to_json(const DecodingParams& params);
DecodingParams decoding_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelExchange& exchange);
ModelExchange model_exchange_from_json(const nlohmann::json& j);

/// A chat-completion backend. One send() is one attempt; retryable failures
/// are reported as TransientError. Must accept concurrent calls.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string send(const ChatRequest& request) = 0;
};

/// OpenAI-compatible `/chat/completions` endpoint.
class OpenAIChatBackend final : public ChatBackend {
 public:
  OpenAIChatBackend(std::string endpoint, std::string model, std::string api_key);
  std::string send(const ChatRequest& request) override;

  const std::string& url() const noexcept { return url_; }

 private:
  std::string url_;
  std::string model_;
  std::string api_key_;
};

/// Canned responses keyed "<kind>:<round>", e.g. "predict:1". The file may
/// also nest such maps under a context key (the video id) so one script can
/// drive a whole benchmark. A value is either a string or a list of strings
/// indexed by re-ask number (the last entry repeats).
class ScriptedChatBackend final : public ChatBackend {
 public:
  explicit ScriptedChatBackend(nlohmann::json script);
  static ScriptedChatBackend from_file(const std::filesystem::path& path);
  std::string send(const ChatRequest& request) override;

 private:
  nlohmann::json script_;
};

/// Adapter for test and oracle backends written as a function.
class FunctionChatBackend final : public ChatBackend {
 public:
  explicit FunctionChatBackend(std::function<std::string(const ChatRequest&)> fn)
      : fn_(std::move(fn)) {}
  std::string send(const ChatRequest& request) override { return fn_(request); }

 private:
  std::function<std::string(const ChatRequest&)> fn_;
};

/// Content-addressed response cache in front of another backend. Entries are
/// keyed by SHA-256 over (namespace, kind, messages, params) and written
/// atomically, one file per entry.
class ReplayCache final : public ChatBackend {
 public:
  ReplayCache(ChatBackend& inner, std::filesystem::path dir, std::string key_namespace = {});
  std::string send(const ChatRequest& request) override;

  std::string key(const ChatRequest& request) const;
  std::filesystem::path entry_path(const ChatRequest& request) const;

 private:
  ChatBackend& inner_;
  std::filesystem::path dir_;
  std::string namespace_;
};

std::string sha256_hex(std::string_view data);

/// Applies the transport retry policy and records the exchange.
class LlmClient {
 public:
  explicit LlmClient(ChatBackend& backend, RetryPolicy retry = {}) : backend_(backend), retry_(retry) {}

  /// Throws RetriesExhaustedError, AuthenticationError, ScriptMissingError or
  /// BackendError; each is distinct.
  ModelExchange complete(const ChatRequest& request);

 private:
  ChatBackend& backend_;
  RetryPolicy retry_;
};

/// Result of asking with parse re-asks.
template <typename T>
struct Asked {
  std::optional<T> value;  // empty when every attempt failed to parse
  std::string raw;         // response text of the last attempt
  std::vector<ModelExchange> exchanges;
};

/// Single-user-message request for a rendered prompt.
ChatRequest make_request(const PromptBundle& prompt, int round, const DecodingParams& params,
                         std::string context = {});

/// Sends `request`; on ParseError re-asks up to `reparse_limit` times with
/// kReaskSuffix appended to the prompt. Transport errors propagate.
template <typename T, typename Parse>
Asked<T> ask_parsed(LlmClient& client, ChatRequest request, int reparse_limit, Parse&& parse) {
  Asked<T> out;
  const auto original = request.messages.back().content;
  for (int attempt = 0; attempt <= reparse_limit; ++attempt) {
    request.reask = attempt;
    if (attempt > 0) {
      request.messages.back().content = original + "\n" + std::string(kReaskSuffix);
    }
    auto exchange = client.complete(request);
    out.raw = exchange.response;
    out.exchanges.push_back(std::move(exchange));
    try {
      out.value = parse(out.raw);
      return out;
    } catch (const ParseError&) {
    }
  }
  return out;
}

}  // namespace frameagent
