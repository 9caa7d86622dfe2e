// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <json.hpp>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "frameagent/assets.hpp"
#include "frameagent/captioner.hpp"
#include "frameagent/chat.hpp"
#include "frameagent/embedder.hpp"
#include "frameagent/parse.hpp"
#include "frameagent/prompts.hpp"
#include "frameagent/retrieval.hpp"
#include "frameagent/state.hpp"

namespace frameagent {

struct LoopConfig {
  int initial_frames = 5;
  int max_rounds = 3;
  int confidence_threshold = 3;  // answer once confidence >= this
  std::size_t max_queries_per_round = 5;
  bool self_evaluation = true;
  bool segment_selection = true;
  DecodingParams decoding;
  int parse_retries = 2;    // re-asks after an unparsable reply
  int network_retries = 3;  // transport retries per call
  int caption_window = 0;
  std::size_t caption_char_cap = 0;
  int fps = 1;

  /// Throws PreconditionError when a field is out of its documented range.
  void validate() const;
  friend bool operator==(const LoopConfig&, const LoopConfig&) = default;
};

nlohmann::json to_json(const LoopConfig& config);

struct AnswerAction {
  int index = 0;
  friend bool operator==(const AnswerAction&, const AnswerAction&) = default;
};

struct SearchAction {
  RetrievalPlan plan;
  friend bool operator==(const SearchAction&, const SearchAction&) = default;
};

using AgentAction = std::variant<AnswerAction, SearchAction>;

/// Everything that happened in one round, in call order.
struct RoundRecord {
  int round = 1;
  CaptionMap captions;  // state at the start of the round
  std::vector<ModelExchange> exchanges;
  int prediction = 0;
  bool prediction_fallback = false;
  std::string rationale;
  std::optional<int> confidence;  // absent when self-evaluation is off
  bool confidence_fallback = false;
  std::string action;  // "answer" | "search"
  std::string reason;  // why this action was taken
  RetrievalPlan plan;
  bool plan_fallback = false;
  Observation observation;
  double elapsed_ms = 0.0;
  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct RunTrace {
  std::string video_id;
  Question question;
  std::vector<RoundRecord> rounds;
  int answer = 0;
  int frames_seen = 0;
  bool degraded = false;  // final answer came from a parse fallback
  nlohmann::json config = nlohmann::json::object();
  friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

/// Run failure that keeps the rounds completed so far.
class RunError : public BackendError {
 public:
  RunError(const std::string& what, RunTrace partial)
      : BackendError(what), partial_(std::move(partial)) {}
  const RunTrace& partial_trace() const noexcept { return partial_; }

 private:
  RunTrace partial_;
};

struct Backends {
  LlmClient& llm;
  TextEmbedder& embedder;
  Captioner& captioner;
};

struct StepResult {
  AgentAction action;
  AgentState state;  // carries the round's prediction and reasoning
  RoundRecord record;
};

/// One round: predict, optionally self-reflect, then either answer or plan a
/// search. The final round always answers.
StepResult step(const AgentState& state, const Question& question, const VideoAssets& assets,
                const LoopConfig& config, Backends& backends);

struct RunResult {
  int answer = 0;
  RunTrace trace;
};

/// The full controller loop. Throws RunError (with the partial trace) when a
/// backend fails past its retry policy.
RunResult run(const Question& question, const VideoAssets& assets, const LoopConfig& config,
              Backends& backends);

}  // namespace frameagent
