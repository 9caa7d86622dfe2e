// SPDX-License-Identifier: Apache-2.0
#include "frameagent/trace.hpp"

#include <fstream>
#include <iterator>

#include "frameagent/errors.hpp"

namespace frameagent {

std::string dump_json(const nlohmann::json& j, int indent) {
  return j.dump(indent, ' ', false, nlohmann::json::error_handler_t::replace);
}

nlohmann::json round_to_json(const RoundRecord& r, bool include_timing) {
  nlohmann::json captions = nlohmann::json::object();
  auto seen = nlohmann::json::array();
  for (const auto& [frame, text] : r.captions) {
    captions[std::to_string(frame)] = text;
    seen.push_back(frame);
  }
  auto exchanges = nlohmann::json::array();
  for (const auto& e : r.exchanges) exchanges.push_back(to_json(e));
  auto plan = nlohmann::json::array();
  for (const auto& item : r.plan.items) {
    plan.push_back({{"segment_id", item.segment_id}, {"query", item.query}});
  }
  auto observation = nlohmann::json::array();
  for (const auto& hit : r.observation.retrieved) {
    observation.push_back({{"frame", hit.frame}, {"query", hit.query}});
  }

  nlohmann::json j = {
      {"round", r.round},
      {"seen", std::move(seen)},
      {"captions", std::move(captions)},
      {"exchanges", std::move(exchanges)},
      {"prediction", r.prediction},
      {"prediction_fallback", r.prediction_fallback},
      {"rationale", r.rationale},
      {"confidence", r.confidence ? nlohmann::json(*r.confidence) : nlohmann::json(nullptr)},
      {"confidence_fallback", r.confidence_fallback},
      {"action", r.action},
      {"reason", r.reason},
      {"plan", std::move(plan)},
      {"plan_fallback", r.plan_fallback},
      {"observation", std::move(observation)},
  };
  if (include_timing) j["elapsed_ms"] = r.elapsed_ms;
  return j;
}

nlohmann::json summary_to_json(const RunTrace& t) {
  return {
      {"answer", t.answer},
      {"rounds", t.rounds.size()},
      {"frames_seen", t.frames_seen},
      {"degraded", t.degraded},
      {"video_id", t.video_id},
      {"question", {{"text", t.question.text}, {"options", t.question.options}}},
      {"config", t.config},
  };
}

std::string to_jsonl(const RunTrace& trace, bool include_timing) {
  std::string out;
  for (const auto& r : trace.rounds) {
    out += dump_json(round_to_json(r, include_timing));
    out += '\n';
  }
  out += dump_json(summary_to_json(trace));
  out += '\n';
  return out;
}

namespace {

RoundRecord round_from_json(const nlohmann::json& j) {
  RoundRecord r;
  r.round = j.at("round").get<int>();
  for (const auto& [frame, text] : j.at("captions").items()) {
    r.captions.emplace(std::stoi(frame), text.get<std::string>());
  }
  for (const auto& e : j.at("exchanges")) r.exchanges.push_back(model_exchange_from_json(e));
  r.prediction = j.at("prediction").get<int>();
  r.prediction_fallback = j.at("prediction_fallback").get<bool>();
  r.rationale = j.at("rationale").get<std::string>();
  if (!j.at("confidence").is_null()) r.confidence = j["confidence"].get<int>();
  r.confidence_fallback = j.at("confidence_fallback").get<bool>();
  r.action = j.at("action").get<std::string>();
  r.reason = j.at("reason").get<std::string>();
  for (const auto& item : j.at("plan")) {
    r.plan.items.push_back({item.at("segment_id").get<int>(), item.at("query").get<std::string>()});
  }
  r.plan_fallback = j.at("plan_fallback").get<bool>();
  for (const auto& hit : j.at("observation")) {
    r.observation.retrieved.push_back({hit.at("frame").get<int>(), hit.at("query").get<std::string>()});
  }
  r.elapsed_ms = j.value("elapsed_ms", 0.0);
  return r;
}

}  // namespace

RunTrace parse_trace(std::string_view text) {
  RunTrace trace;
  bool have_summary = false;
  std::size_t pos = 0;
  int line_no = 0;
  try {
    while (pos < text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      const auto line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      if (have_summary) throw Error("content after the summary object");

      const auto j = nlohmann::json::parse(line);
      if (j.contains("round")) {
        trace.rounds.push_back(round_from_json(j));
        continue;
      }
      trace.answer = j.at("answer").get<int>();
      trace.frames_seen = j.at("frames_seen").get<int>();
      trace.degraded = j.at("degraded").get<bool>();
      trace.video_id = j.value("video_id", "");
      if (j.contains("question")) {
        trace.question.text = j["question"].at("text").get<std::string>();
        trace.question.options = j["question"].at("options").get<std::vector<std::string>>();
      }
      trace.config = j.value("config", nlohmann::json::object());
      if (j.at("rounds").get<std::size_t>() != trace.rounds.size()) {
        throw Error("summary round count does not match the round records");
      }
      have_summary = true;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("trace line " + std::to_string(line_no) + ": " + e.what());
  } catch (const Error& e) {
    throw Error("trace line " + std::to_string(line_no) + ": " + e.what());
  } catch (const std::logic_error& e) {
    throw Error("trace line " + std::to_string(line_no) + ": bad frame key (" + e.what() + ")");
  }
  if (!have_summary) throw Error("trace has no summary object");
  return trace;
}

RunTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open trace " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_trace(text);
}

void write_trace(const RunTrace& trace, const std::filesystem::path& path, bool include_timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write trace " + path.string());
  out << to_jsonl(trace, include_timing);
}

std::string trace_hash(const RunTrace& trace) { return sha256_hex(to_jsonl(trace, false)); }

}  // namespace frameagent
