// SPDX-License-Identifier: Apache-2.0
#include "frameagent/agent.hpp"

#include <chrono>

#include "frameagent/errors.hpp"

namespace frameagent {

void LoopConfig::validate() const {
  if (initial_frames < 2) throw PreconditionError("initial frames must be at least 2");
  if (max_rounds < 1) throw PreconditionError("max rounds must be at least 1");
  if (confidence_threshold < 1 || confidence_threshold > 3) {
    throw PreconditionError("confidence threshold must be 1, 2 or 3");
  }
  if (max_queries_per_round < 1) throw PreconditionError("max queries per round must be positive");
  if (parse_retries < 0 || network_retries < 0) throw PreconditionError("retry counts must be >= 0");
  if (caption_window < 0) throw PreconditionError("caption window must be >= 0");
  if (fps < 1) throw PreconditionError("fps must be positive");
}

nlohmann::json to_json(const LoopConfig& c) {
  return {
      {"initial_frames", c.initial_frames},
      {"max_rounds", c.max_rounds},
      {"confidence_threshold", c.confidence_threshold},
      {"max_queries_per_round", c.max_queries_per_round},
      {"self_evaluation", c.self_evaluation},
      {"segment_selection", c.segment_selection},
      {"decoding", to_json(c.decoding)},
      {"parse_retries", c.parse_retries},
      {"network_retries", c.network_retries},
      {"caption_window", c.caption_window},
      {"caption_char_cap", c.caption_char_cap},
      {"fps", c.fps},
  };
}

namespace {

constexpr std::string_view kMissingReasoning = "(no reasoning was produced)";

template <typename T>
void take_exchanges(RoundRecord& record, Asked<T>& asked) {
  for (auto& e : asked.exchanges) record.exchanges.push_back(std::move(e));
  asked.exchanges.clear();
}

}  // namespace

StepResult step(const AgentState& state, const Question& question, const VideoAssets& assets,
                const LoopConfig& config, Backends& backends) {
  const auto started = std::chrono::steady_clock::now();
  const int round = state.round();
  const RenderOptions render{config.fps, config.caption_char_cap};
  const int num_options = static_cast<int>(question.options.size());

  RoundRecord record;
  record.round = round;
  record.captions = state.captions();

  auto predicted = ask_parsed<AnswerParse>(
      backends.llm,
      make_request(render_predict_prompt(state, question, render), round, config.decoding,
                   assets.video_id()),
      config.parse_retries, [&](const std::string& raw) { return parse_answer(raw, num_options); });
  take_exchanges(record, predicted);
  if (predicted.value) {
    record.prediction = predicted.value->index;
    record.rationale = predicted.value->rationale;
  } else {
    record.prediction = 0;
    record.prediction_fallback = true;
  }
  // The reflection sees the whole reasoning reply, answer literal included.
  const std::string reasoning = predicted.raw.empty() ? std::string(kMissingReasoning) : predicted.raw;
  auto next = state.with_prediction(record.prediction, reasoning);

  auto confidence = Confidence::Insufficient;
  if (config.self_evaluation) {
    auto reflected = ask_parsed<Confidence>(
        backends.llm,
        make_request(render_reflect_prompt(state, question, record.prediction, reasoning, render),
                     round, config.decoding, assets.video_id()),
        config.parse_retries, [](const std::string& raw) { return parse_confidence(raw); });
    take_exchanges(record, reflected);
    if (reflected.value) {
      confidence = *reflected.value;
    } else {
      record.confidence_fallback = true;
    }
    record.confidence = level(confidence);
  }

  const auto finish = [&](AgentAction action, std::string reason) {
    record.action = std::holds_alternative<AnswerAction>(action) ? "answer" : "search";
    record.reason = std::move(reason);
    record.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return StepResult{std::move(action), std::move(next), std::move(record)};
  };

  if (level(confidence) >= config.confidence_threshold) {
    return finish(AnswerAction{record.prediction}, "confident");
  }
  if (round >= config.max_rounds) {
    return finish(AnswerAction{record.prediction}, "max_rounds");
  }

  const auto seen = state.seen();
  const auto targets = plan_targets(seen, state.frame_count(), config.segment_selection);
  bool any_unseen = false;
  for (const auto& t : targets) any_unseen = any_unseen || !t.empty();
  if (!any_unseen) {
    return finish(AnswerAction{record.prediction}, "no_unseen_frames");
  }

  // The partition shown to the model is always the real one; with segment
  // selection off the plan is validated against the whole-video segment.
  const auto partition = partition_segments(seen, state.frame_count());
  auto planned = ask_parsed<RetrievalPlan>(
      backends.llm,
      make_request(render_search_prompt(state, question, partition, render, config.segment_selection),
                   round, config.decoding, assets.video_id()),
      config.parse_retries, [&](const std::string& raw) {
        return parse_plan(raw, targets, config.max_queries_per_round);
      });
  take_exchanges(record, planned);
  if (planned.value) {
    record.plan = *planned.value;
  } else {
    record.plan_fallback = true;
  }
  if (record.plan.items.empty()) {
    return finish(AnswerAction{record.prediction}, "empty_plan");
  }
  return finish(SearchAction{record.plan}, "low_confidence");
}

RunResult run(const Question& question, const VideoAssets& assets, const LoopConfig& config,
              Backends& backends) {
  config.validate();
  RunTrace trace;
  trace.video_id = assets.video_id();
  trace.question = question;
  trace.config = to_json(config);

  try {
    auto state = init_state(assets, config.initial_frames, backends.captioner, config.caption_window);
    int stalled = 0;
    for (int t = 1; t <= config.max_rounds; ++t) {
      auto result = step(state, question, assets, config, backends);
      state = std::move(result.state);
      auto& record = trace.rounds.emplace_back(std::move(result.record));
      trace.answer = record.prediction;
      trace.degraded = record.prediction_fallback;
      if (std::holds_alternative<AnswerAction>(result.action)) break;

      const auto started = std::chrono::steady_clock::now();
      const auto& plan = std::get<SearchAction>(result.action).plan;
      record.observation =
          execute_plan(assets, plan, state.seen(), backends.embedder, config.segment_selection);
      CaptionMap fresh;
      for (const auto& hit : record.observation.retrieved) {
        try {
          fresh.emplace(hit.frame, caption(backends.captioner, assets, {hit.frame, config.caption_window}));
        } catch (const BackendError& e) {
          throw BackendError("captioning frame " + std::to_string(hit.frame) + ": " + e.what());
        }
      }
      record.elapsed_ms +=
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

      if (fresh.empty()) {
        // Nothing new to look at; a second consecutive stall cannot change the state.
        if (++stalled >= 2) {
          record.reason = "no_progress";
          break;
        }
      } else {
        stalled = 0;
        state = merge(state, fresh);
      }
      state = state.next_round();
    }
    trace.frames_seen = static_cast<int>(state.seen_count());
  } catch (const RunError&) {
    throw;
  } catch (const BackendError& e) {
    throw RunError(e.what(), std::move(trace));
  }
  return {trace.answer, std::move(trace)};
}

}  // namespace frameagent
