// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "frameagent/bench.hpp"
#include "frameagent/captioner.hpp"
#include "frameagent/errors.hpp"
#include "frameagent/trace.hpp"
#include "support.hpp"

using namespace frameagent;
using namespace frameagent::testing;

namespace {

struct ScriptedBench {
  explicit ScriptedBench(nlohmann::json script, std::map<std::string, Vector> table = {})
      : mock(std::move(script)), llm(mock), embedder(std::move(table)), backends{llm, embedder, store} {}
  ScriptedChatBackend mock;
  LlmClient llm;
  TableEmbedder embedder;
  StoreCaptioner store;
  Backends backends;
};

EvalOptions options_for(const TempDir& dir, std::size_t workers = 1) {
  EvalOptions o;
  o.assets_dir = dir.path();
  o.workers = workers;
  return o;
}

// Answers `answer` in round 1 at full confidence.
nlohmann::json confident_script(int answer) {
  return {{"predict:1", "{'final_answer': '" + std::to_string(answer) + "'}"}, {"reflect:1", "{'confidence': '3'}"}};
}

std::size_t count_frames_in(const std::string& prompt) {
  std::size_t n = 0;
  for (auto pos = prompt.find("'frame "); pos != std::string::npos; pos = prompt.find("'frame ", pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Dataset, ParsesAndValidates) {
  const auto items = parse_dataset(
      "{\"video_id\": \"a\", \"question\": \"q1\", \"options\": [\"x\", \"y\"], \"answer_index\": 1, \"qtype\": \"t\"}\n"
      "\n"
      "{\"video_id\": \"b\", \"question\": \"q2\", \"options\": [\"x\", \"y\", \"z\"]}\n"
      "{\"video_id\": \"c\", \"question\": \"q3\", \"options\": [\"x\", \"y\"], \"answer_index\": null}\r\n");
  ASSERT_EQ(items.size(), 3u);
  EXPECT_EQ(items[0].answer_index, 1);
  EXPECT_EQ(items[0].qtype, "t");
  EXPECT_FALSE(items[1].answer_index);
  EXPECT_EQ(items[2].video_id, "c");

  try {
    parse_dataset("{\"video_id\": \"a\", \"question\": \"q\", \"options\": [\"1\",\"2\",\"3\",\"4\",\"5\"]}\n"
                  "{\"video_id\": \"a\", \"question\": \"q\", \"options\": [\"1\",\"2\",\"3\",\"4\",\"5\"], "
                  "\"answer_index\": 7}\n");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_dataset("not json\n"), Error);
  EXPECT_THROW(parse_dataset("{\"video_id\": \"a\", \"question\": \"q\", \"options\": [\"only\"]}"), Error);
  EXPECT_THROW(parse_dataset("{\"question\": \"q\", \"options\": [\"a\", \"b\"]}"), Error);
  EXPECT_THROW(load_dataset("/nonexistent.jsonl"), Error);
}

TEST(Dataset, RoundTripsThroughFixtureWriter) {
  const auto items = ten_item_suite();
  EXPECT_EQ(parse_dataset(dataset_text(items)), items);
}

TEST(Evaluate, TenItemScriptedSuite) {
  TempDir dir;
  const auto assets = dough_assets();
  write_assets(assets, dir / "dough");
  ScriptedBench b(two_round_script(), two_round_table(assets));
  const auto items = ten_item_suite();
  const auto m = evaluate(items, LoopConfig{}, b.backends, options_for(dir));
  EXPECT_EQ(m.items, 10u);
  EXPECT_EQ(m.evaluated, 10u);
  EXPECT_EQ(m.correct, 8u);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.8);
  EXPECT_DOUBLE_EQ(m.mean_frames, 6.0);
  EXPECT_EQ(m.min_frames, 6);
  EXPECT_EQ(m.max_frames, 6);
  EXPECT_DOUBLE_EQ(m.mean_rounds, 2.0);
  EXPECT_EQ(m.degraded, 0u);
  ASSERT_EQ(m.per_qtype.size(), 2u);
  EXPECT_EQ(m.per_qtype.at("order").labeled, 5u);
  EXPECT_EQ(m.per_qtype.at("order").correct, 4u);
  EXPECT_EQ(m.per_qtype.at(kUntypedBucket).correct, 4u);
  std::size_t weighted = 0;
  for (const auto& [_, s] : m.per_qtype) weighted += s.correct;
  EXPECT_EQ(weighted, m.correct);

  const auto j = to_json(m);
  EXPECT_EQ(j["accuracy"], 0.8);
  EXPECT_EQ(j["per_qtype"]["order"]["labeled"], 5);
}

TEST(Evaluate, DeterministicAcrossRunsAndWorkerCounts) {
  TempDir dir;
  const auto assets = dough_assets();
  write_assets(assets, dir / "dough");
  ScriptedBench b(two_round_script(), two_round_table(assets));
  const auto items = ten_item_suite();
  const auto a = to_json(evaluate(items, LoopConfig{}, b.backends, options_for(dir, 1)));
  const auto c = to_json(evaluate(items, LoopConfig{}, b.backends, options_for(dir, 4)));
  EXPECT_EQ(a, c);
  EXPECT_EQ(a, to_json(evaluate(items, LoopConfig{}, b.backends, options_for(dir, 1))));
}

TEST(Evaluate, AllConfidentUsesOneRound) {
  TempDir dir;
  write_assets(dough_assets(), dir / "dough");
  ScriptedBench b(confident_script(2));
  const auto m = evaluate(ten_item_suite(), LoopConfig{}, b.backends, options_for(dir));
  EXPECT_DOUBLE_EQ(m.mean_rounds, 1.0);
  EXPECT_DOUBLE_EQ(m.mean_frames, 5.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.8);
}

TEST(Evaluate, AllCorrectAndAllWrong) {
  TempDir dir;
  write_assets(dough_assets(), dir / "dough");
  auto items = ten_item_suite();
  for (auto& i : items) i.answer_index = 2;
  ScriptedBench right(confident_script(2));
  EXPECT_DOUBLE_EQ(evaluate(items, LoopConfig{}, right.backends, options_for(dir)).accuracy, 1.0);
  ScriptedBench wrong(confident_script(1));
  EXPECT_DOUBLE_EQ(evaluate(items, LoopConfig{}, wrong.backends, options_for(dir)).accuracy, 0.0);
}

TEST(Evaluate, MissingBundleSkippedOrFatal) {
  TempDir dir;
  write_assets(dough_assets(), dir / "dough");
  ScriptedBench b(confident_script(2));
  auto items = ten_item_suite();
  items[3].video_id = "missing";
  const auto m = evaluate(items, LoopConfig{}, b.backends, options_for(dir));
  EXPECT_EQ(m.skipped, 1u);
  EXPECT_EQ(m.evaluated, 9u);
  EXPECT_TRUE(m.outcomes[3].skipped);
  EXPECT_NE(m.outcomes[3].skip_reason.find("missing"), std::string::npos);
  EXPECT_EQ(to_json(m)["skipped_items"][0]["item"], 3);

  auto opts = options_for(dir, 3);
  opts.fail_fast = true;
  EXPECT_THROW(evaluate(items, LoopConfig{}, b.backends, opts), AssetError);
}

TEST(Evaluate, WritesOneTracePerItem) {
  TempDir dir;
  const auto assets = dough_assets();
  write_assets(assets, dir / "dough");
  ScriptedBench b(two_round_script(), two_round_table(assets));
  auto opts = options_for(dir, 2);
  opts.trace_dir = dir / "traces";
  const auto items = ten_item_suite();
  evaluate(items, LoopConfig{}, b.backends, opts);
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "traces")) {
    ++files;
    EXPECT_EQ(read_trace(entry.path()).answer, kTwoRoundAnswer);
  }
  EXPECT_EQ(files, 10u);
}

TEST(UniformBaseline, MatchesSingleRoundAgentWithoutReflection) {
  TempDir dir;
  write_assets(dough_assets(), dir / "dough");
  std::vector<std::string> prompts;
  FunctionChatBackend backend([&](const ChatRequest& r) {
    prompts.push_back(r.messages.back().content);
    return "{'final_answer': '" + std::to_string(sha256_hex(r.messages.back().content)[0] % 5) + "'}";
  });
  LlmClient llm(backend);
  HashEmbedder embedder(8, 0);
  StoreCaptioner store;
  Backends b{llm, embedder, store};
  auto items = ten_item_suite();
  items.resize(1);

  const auto base = uniform_baseline(items, 5, LoopConfig{}, b, options_for(dir));
  LoopConfig one;
  one.max_rounds = 1;
  one.self_evaluation = false;
  const auto agent = evaluate(items, one, b, options_for(dir));
  ASSERT_EQ(prompts.size(), 2u);
  EXPECT_EQ(prompts[0], prompts[1]);
  EXPECT_EQ(base.outcomes[0].answer, agent.outcomes[0].answer);
  EXPECT_EQ(base.mean_frames, 5.0);
  EXPECT_EQ(base.mean_rounds, 1.0);
}

TEST(UniformBaseline, FullBudgetFeedsEveryCaption) {
  TempDir dir;
  write_assets(random_assets("short", 30, 4, 2), dir / "short");
  std::string prompt;
  FunctionChatBackend backend([&](const ChatRequest& r) {
    prompt = r.messages.back().content;
    return std::string("{'final_answer': '0'}");
  });
  LlmClient llm(backend);
  HashEmbedder embedder(4, 0);
  StoreCaptioner store;
  Backends b{llm, embedder, store};
  const std::vector<QAItem> items{{"short", "q?", {"a", "b"}, 0, std::nullopt}};
  EXPECT_EQ(uniform_baseline(items, 30, LoopConfig{}, b, options_for(dir)).mean_frames, 30.0);
  EXPECT_EQ(count_frames_in(prompt), 30u);
  EXPECT_EQ(uniform_baseline(items, 500, LoopConfig{}, b, options_for(dir)).mean_frames, 30.0);
  EXPECT_THROW(uniform_baseline(items, 1, LoopConfig{}, b, options_for(dir)), PreconditionError);
}

TEST(Sweep, AxesProduceOneRowPerValue) {
  TempDir dir;
  const auto assets = dough_assets();
  write_assets(assets, dir / "dough");
  ScriptedBench b(two_round_script(), two_round_table(assets));
  const auto items = ten_item_suite();

  const std::vector<int> rounds{1, 2, 3};
  const auto by_rounds = sweep(items, SweepAxis::Rounds, rounds, LoopConfig{}, b.backends, options_for(dir));
  ASSERT_EQ(by_rounds.size(), 3u);
  for (std::size_t i = 1; i < by_rounds.size(); ++i) {
    EXPECT_LE(by_rounds[i - 1].metrics.mean_frames, by_rounds[i].metrics.mean_frames);
  }
  EXPECT_DOUBLE_EQ(by_rounds[0].metrics.mean_frames, 5.0);
  EXPECT_DOUBLE_EQ(by_rounds[2].metrics.mean_frames, 6.0);

  const std::vector<int> inits{3, 5, 8};
  ScriptedBench confident(confident_script(2));
  const auto by_init = sweep(items, SweepAxis::InitFrames, inits, LoopConfig{}, confident.backends, options_for(dir));
  ASSERT_EQ(by_init.size(), 3u);
  EXPECT_DOUBLE_EQ(by_init[2].metrics.mean_frames, 8.0);

  const std::vector<int> budgets{5, 9, 45, 180};
  const auto by_budget = sweep(items, SweepAxis::Budget, budgets, LoopConfig{}, confident.backends, options_for(dir));
  ASSERT_EQ(by_budget.size(), 4u);
  EXPECT_DOUBLE_EQ(by_budget[3].metrics.mean_frames, 180.0);

  const auto csv = sweep_csv(by_rounds);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(csv.rfind("axis,value,items,", 0), 0u);
  EXPECT_NE(csv.find("\nrounds,2,10,10,0,0.8000,6.0000,"), std::string::npos) << csv;

  const std::vector<int> none;
  EXPECT_THROW(sweep(items, SweepAxis::Rounds, none, LoopConfig{}, b.backends, options_for(dir)), PreconditionError);
  EXPECT_EQ(parse_sweep_axis("init_frames"), SweepAxis::InitFrames);
  EXPECT_FALSE(parse_sweep_axis("frames"));
}

TEST(Cost, ReferencePoint) {
  EXPECT_NEAR(cost_fraction({180, 8.4, 0.02, 20, 10, 3}), 0.0187, 0.0005);
  EXPECT_NEAR(cost_fraction({180, 8.4, 0.02, 20, 10, 3}), 3.768 / (3.768 + 168 + 30), 1e-12);
  EXPECT_DOUBLE_EQ(cost_fraction({180, 8.4, 0.02, 0, 0, 3}), 1.0);
  EXPECT_DOUBLE_EQ(cost_fraction({180, 8.4, 0.0, 20, 10, 3}), 0.0);
  EXPECT_THROW(cost_fraction({0, 0, 0, 0, 0, 0}), PreconditionError);
  EXPECT_THROW(cost_fraction({180, 8.4, -1, 20, 10, 3}), PreconditionError);
}

TEST(Cost, Monotonicity) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.01, 50.0);
  for (int i = 0; i < 5000; ++i) {
    const CostParams p{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const double base = cost_fraction(p);
    ASSERT_GE(base, 0.0);
    ASSERT_LE(base, 1.0);
    auto more_x = p;
    more_x.embed_seconds *= 1.5;
    auto more_y = p;
    more_y.caption_seconds *= 1.5;
    auto more_z = p;
    more_z.controller_seconds *= 1.5;
    ASSERT_GT(cost_fraction(more_x), base);
    ASSERT_LT(cost_fraction(more_y), base);
    ASSERT_LT(cost_fraction(more_z), base);
  }
}
