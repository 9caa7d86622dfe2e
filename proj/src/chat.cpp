// SPDX-License-Identifier: Apache-2.0
#include "frameagent/chat.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <fstream>
#include <iterator>
#include <sstream>
#include <thread>

namespace frameagent {

namespace {

constexpr auto kDumpErrors = nlohmann::json::error_handler_t::replace;

nlohmann::json messages_json(const std::vector<ChatMessage>& messages) {
  auto out = nlohmann::json::array();
  for (const auto& m : messages) {
    out.push_back({{"role", m.role}, {"content", m.content}});
  }
  return out;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

nlohmann::json to_json(const DecodingParams& params) {
  nlohmann::json j = {{"temperature", params.temperature}};
  if (params.max_tokens) j["max_tokens"] = *params.max_tokens;
  if (params.seed) j["seed"] = *params.seed;
  return j;
}

DecodingParams decoding_params_from_json(const nlohmann::json& j) {
  DecodingParams p;
  p.temperature = j.value("temperature", 0.0);
  if (j.contains("max_tokens")) p.max_tokens = j["max_tokens"].get<int>();
  if (j.contains("seed")) p.seed = j["seed"].get<std::int64_t>();
  return p;
}

nlohmann::json to_json(const ModelExchange& e) {
  return {
      {"kind", to_string(e.kind)},   {"round", e.round},         {"messages", messages_json(e.messages)},
      {"params", to_json(e.params)}, {"response", e.response},   {"attempts", e.attempts},
  };
}

ModelExchange model_exchange_from_json(const nlohmann::json& j) {
  ModelExchange e;
  const auto kind = parse_prompt_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error("unknown prompt kind in exchange record");
  e.kind = *kind;
  e.round = j.at("round").get<int>();
  for (const auto& m : j.at("messages")) {
    e.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
  }
  e.params = decoding_params_from_json(j.at("params"));
  e.response = j.at("response").get<std::string>();
  e.attempts = j.at("attempts").get<int>();
  return e;
}

OpenAIChatBackend::OpenAIChatBackend(std::string endpoint, std::string model, std::string api_key)
    : url_(std::move(endpoint)), model_(std::move(model)), api_key_(std::move(api_key)) {
  while (!url_.empty() && url_.back() == '/') url_.pop_back();
  if (!ends_with(url_, "/chat/completions")) url_ += "/chat/completions";
}

std::string OpenAIChatBackend::send(const ChatRequest& request) {
  nlohmann::json body = {
      {"model", model_},
      {"messages", messages_json(request.messages)},
      {"temperature", request.params.temperature},
  };
  if (request.params.max_tokens) body["max_tokens"] = *request.params.max_tokens;
  if (request.params.seed) body["seed"] = *request.params.seed;

  HeaderList headers;
  if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);

  const auto response = http_post_json(url_, body.dump(-1, ' ', false, kDumpErrors), headers);
  raise_for_status(response, "chat endpoint");
  const auto parsed = nlohmann::json::parse(response.body, nullptr, false);
  if (parsed.is_discarded()) {
    throw BackendError("chat endpoint: response is not JSON");
  }
  const auto ptr = nlohmann::json::json_pointer("/choices/0/message/content");
  if (!parsed.contains(ptr) || !parsed[ptr].is_string()) {
    throw BackendError("chat endpoint: response lacks choices[0].message.content");
  }
  return parsed[ptr].get<std::string>();
}

ScriptedChatBackend::ScriptedChatBackend(nlohmann::json script) : script_(std::move(script)) {
  if (!script_.is_object()) throw Error("mock script must be a JSON object");
}

ScriptedChatBackend ScriptedChatBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mock script " + path.string());
  auto parsed = nlohmann::json::parse(in, nullptr, false);
  if (parsed.is_discarded()) throw Error("mock script is not valid JSON: " + path.string());
  return ScriptedChatBackend(std::move(parsed));
}

std::string ScriptedChatBackend::send(const ChatRequest& request) {
  const auto key = std::string(to_string(request.kind)) + ":" + std::to_string(request.round);
  const nlohmann::json* table = &script_;
  if (!request.context.empty() && script_.contains(request.context) &&
      script_[request.context].is_object()) {
    table = &script_[request.context];
  }
  if (!table->contains(key)) {
    throw ScriptMissingError("mock script has no entry for " + key +
                             (request.context.empty() ? "" : " (" + request.context + ")"));
  }
  const auto& entry = (*table)[key];
  if (entry.is_string()) return entry.get<std::string>();
  if (entry.is_array() && !entry.empty()) {
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(request.reask), entry.size() - 1);
    if (entry[i].is_string()) return entry[i].get<std::string>();
  }
  throw ScriptMissingError("mock script entry " + key + " is not a string or list of strings");
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

ReplayCache::ReplayCache(ChatBackend& inner, std::filesystem::path dir, std::string key_namespace)
    : inner_(inner), dir_(std::move(dir)), namespace_(std::move(key_namespace)) {
  std::filesystem::create_directories(dir_);
}

std::string ReplayCache::key(const ChatRequest& request) const {
  const nlohmann::json material = {
      {"namespace", namespace_},
      {"kind", to_string(request.kind)},
      {"messages", messages_json(request.messages)},
      {"params", to_json(request.params)},
  };
  return sha256_hex(material.dump(-1, ' ', false, kDumpErrors));
}

std::filesystem::path ReplayCache::entry_path(const ChatRequest& request) const {
  return dir_ / (key(request) + ".json");
}

std::string ReplayCache::send(const ChatRequest& request) {
  const auto path = entry_path(request);
  if (std::ifstream in(path); in) {
    const auto cached = nlohmann::json::parse(in, nullptr, false);
    if (!cached.is_discarded() && cached.contains("response") && cached["response"].is_string()) {
      return cached["response"].get<std::string>();
    }
  }
  auto response = inner_.send(request);

  static std::atomic<unsigned long> counter{0};
  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp." << std::this_thread::get_id() << "." << counter++;
  const auto tmp = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary);
    out << nlohmann::json{{"kind", to_string(request.kind)}, {"response", response}}.dump(
        -1, ' ', false, kDumpErrors);
  }
  std::filesystem::rename(tmp, path);
  return response;
}

ModelExchange LlmClient::complete(const ChatRequest& request) {
  ModelExchange exchange{request.kind, request.round, request.messages, request.params, {}, 0};
  exchange.response = with_retries(retry_, [&] { return backend_.send(request); }, exchange.attempts);
  return exchange;
}

ChatRequest make_request(const PromptBundle& prompt, int round, const DecodingParams& params,
                         std::string context) {
  ChatRequest r;
  r.kind = prompt.kind;
  r.round = round;
  r.context = std::move(context);
  r.messages.push_back({"user", prompt.text});
  r.params = params;
  return r;
}

}  // namespace frameagent
