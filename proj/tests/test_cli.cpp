// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <atomic>
#include <sstream>

#include "cli.hpp"
#include "frameagent/trace.hpp"
#include "local_server.hpp"
#include "support.hpp"

using namespace frameagent;
using namespace frameagent::testing;

namespace {

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation invoke(const std::vector<std::string>& args, const cli::Environment& env = {}) {
  std::ostringstream out, err;
  Invocation r;
  r.code = cli::run(args, out, err, env);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// A dough bundle, the two-round script and its query table on disk.
struct Workspace {
  Workspace() {
    const auto assets = dough_assets();
    write_assets(assets, dir / "dough");
    write_file(dir / "script.json", two_round_script().dump());
    write_file(dir / "table.json", table_json(two_round_table(assets)).dump());
    write_file(dir / "dataset.jsonl", dataset_text(ten_item_suite()));
  }
  std::vector<std::string> answer_args() const {
    std::vector<std::string> args{"answer",
                                  "--assets", (dir / "dough").string(),
                                  "--mock-script", (dir / "script.json").string(),
                                  "--embed-table", (dir / "table.json").string(),
                                  "--question", dough_question().text};
    for (const auto& o : dough_question().options) {
      args.push_back("--option");
      args.push_back(o);
    }
    return args;
  }
  std::vector<std::string> bench_args() const {
    return {"bench",
            "--assets", dir.path().string(),
            "--dataset", (dir / "dataset.jsonl").string(),
            "--mock-script", (dir / "script.json").string(),
            "--embed-table", (dir / "table.json").string()};
  }
  TempDir dir;
};

std::vector<std::string> plus(std::vector<std::string> args, const std::vector<std::string>& more) {
  args.insert(args.end(), more.begin(), more.end());
  return args;
}

}  // namespace

TEST(Cli, AnswerWithScriptedBackend) {
  Workspace w;
  const auto r = invoke(plus(w.answer_args(), {"--trace-out", (w.dir / "t.jsonl").string()}));
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, "2\t" + dough_question().options[2] + "\n");
  const auto trace = read_trace(w.dir / "t.jsonl");
  EXPECT_EQ(trace.rounds.size(), 2u);
  EXPECT_EQ(trace.config["loop"]["max_rounds"], 3);
  EXPECT_EQ(trace.config["backends"]["captioner"], "store");
}

TEST(Cli, AnswerNeedsAssetsAndOptions) {
  Workspace w;
  auto r = invoke({"answer", "--question", "q", "--option", "a", "--option", "b"});
  EXPECT_EQ(r.code, cli::kExitError);
  EXPECT_NE(r.err.find("--assets"), std::string::npos);
  r = invoke({"answer", "--assets", (w.dir / "dough").string(), "--mock-script", (w.dir / "script.json").string(),
              "--question", "q", "--option", "a"});
  EXPECT_EQ(r.code, cli::kExitError);
  r = invoke({"answer", "--assets", (w.dir / "dough").string(), "--question", "q", "--option", "a", "--option", "b"});
  EXPECT_EQ(r.code, cli::kExitError);
  EXPECT_NE(r.err.find("chat backend"), std::string::npos) << r.err;
  EXPECT_EQ(invoke({}).code, cli::kExitError);
  EXPECT_EQ(invoke({"--help"}).code, cli::kExitOk);
  EXPECT_EQ(invoke({"answer", "--no-such-flag"}).code, cli::kExitError);
}

TEST(Cli, GarbageBackendExitsDegraded) {
  Workspace w;
  write_file(w.dir / "garbage.json",
             nlohmann::json{{"predict:1", "no map here"}, {"predict:2", "still nothing"},
                            {"predict:3", "nope"}, {"reflect:1", "?"}, {"reflect:2", "?"},
                            {"search:1", "?"}, {"search:2", "?"}}
                 .dump());
  auto args = w.answer_args();
  args[4] = (w.dir / "garbage.json").string();
  const auto r = invoke(plus(args, {"--trace-out", (w.dir / "g.jsonl").string()}));
  EXPECT_EQ(r.code, cli::kExitDegraded) << r.err;
  EXPECT_EQ(r.out.substr(0, 2), "0\t");
  EXPECT_NE(r.err.find("degraded"), std::string::npos);
  EXPECT_TRUE(read_trace(w.dir / "g.jsonl").degraded);
}

TEST(Cli, PrecedenceFlagOverEnvOverFile) {
  Workspace w;
  nlohmann::json steady;
  for (int r = 1; r <= 4; ++r) {
    const auto rs = std::to_string(r);
    steady["predict:" + rs] = "{'final_answer': '1'}";
    steady["reflect:" + rs] = "{'confidence': '1'}";
    steady["search:" + rs] = "{'frame_descriptions': [{'segment_id': '1', 'description': 'a cup'}]}";
  }
  write_file(w.dir / "steady.json", steady.dump());
  write_file(w.dir / "config.toml", "max-rounds=1\ninit-frames=3\n");
  const auto trace_path = (w.dir / "p.jsonl").string();
  const std::vector<std::string> base = {
      "answer", "--assets", (w.dir / "dough").string(), "--mock-script", (w.dir / "steady.json").string(),
      "--question", "q?", "--option", "a", "--option", "b",
      "--config", (w.dir / "config.toml").string(), "--trace-out", trace_path};
  const auto loop = [&] { return read_trace(trace_path).config["loop"]; };

  ASSERT_EQ(invoke(base).code, cli::kExitOk);
  EXPECT_EQ(loop()["max_rounds"], 1);
  EXPECT_EQ(loop()["initial_frames"], 3);

  ASSERT_EQ(invoke(base, {{"FRAMEAGENT_MAX_ROUNDS", "2"}}).code, cli::kExitOk);
  EXPECT_EQ(loop()["max_rounds"], 2);
  EXPECT_EQ(loop()["initial_frames"], 3);

  ASSERT_EQ(invoke(plus(base, {"--max-rounds", "4"}), {{"FRAMEAGENT_MAX_ROUNDS", "2"}}).code, cli::kExitOk);
  EXPECT_EQ(loop()["max_rounds"], 4);

  ASSERT_EQ(invoke(base, {{"FRAMEAGENT_NO_SELF_EVAL", "true"}}).code, cli::kExitOk);
  EXPECT_EQ(loop()["self_evaluation"], false);
  ASSERT_EQ(invoke(base, {{"FRAMEAGENT_NO_SELF_EVAL", "0"}}).code, cli::kExitOk);
  EXPECT_EQ(loop()["self_evaluation"], true);

  EXPECT_EQ(invoke(base, {{"FRAMEAGENT_MAX_ROUNDS", "zero"}}).code, cli::kExitError);
}

TEST(Cli, BenchPrintsSummaryAndWritesOutputs) {
  Workspace w;
  const auto metrics = (w.dir / "m.json").string();
  auto r = invoke(plus(w.bench_args(), {"--metrics-out", metrics, "--workers", "3"}));
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, "acc=0.800 frames=6.0 rounds=2.0\n");
  const auto doc = nlohmann::json::parse(read_file(metrics));
  EXPECT_EQ(doc["rows"][0]["correct"], 8);
  EXPECT_TRUE(doc["config"].contains("loop"));

  const auto csv = (w.dir / "sweep.csv").string();
  r = invoke(plus(w.bench_args(), {"--axis", "rounds", "--values", "1,2,3", "--csv-out", csv}));
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out,
            "rounds=1 acc=0.000 frames=5.0 rounds=1.0\n"
            "rounds=2 acc=0.800 frames=6.0 rounds=2.0\n"
            "rounds=3 acc=0.800 frames=6.0 rounds=2.0\n");
  const auto text = read_file(csv);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);

  r = invoke(plus(w.bench_args(), {"--budget", "8"}));
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("frames=8.0 rounds=1.0"), std::string::npos) << r.out;

  EXPECT_EQ(invoke(plus(w.bench_args(), {"--axis", "speed", "--values", "1"})).code, cli::kExitError);
  EXPECT_EQ(invoke(plus(w.bench_args(), {"--axis", "rounds"})).code, cli::kExitError);

  write_file(w.dir / "empty.jsonl", "\n");
  auto args = w.bench_args();
  args[4] = (w.dir / "empty.jsonl").string();
  r = invoke(args);
  EXPECT_EQ(r.code, cli::kExitError);
  EXPECT_NE(r.err.find("no items"), std::string::npos);
}

TEST(Cli, ValidateReportsViolations) {
  Workspace w;
  auto r = invoke({"validate", (w.dir / "dough").string()});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_EQ(r.out, "OK\n");

  auto bytes = read_file(w.dir / "dough" / "embeddings.faem");
  bytes[0] = 'X';
  write_file(w.dir / "dough" / "embeddings.faem", bytes);
  r = invoke({"validate", (w.dir / "dough").string()});
  EXPECT_EQ(r.code, cli::kExitError);
  EXPECT_EQ(r.out.rfind("violation: ", 0), 0u) << r.out;

  EXPECT_EQ(invoke({"validate", (w.dir / "nowhere").string()}).code, cli::kExitError);
  EXPECT_EQ(invoke({"validate"}).code, cli::kExitError);
}

TEST(Cli, TracePrintsRoundsAndSummary) {
  Workspace w;
  const auto path = (w.dir / "t.jsonl").string();
  ASSERT_EQ(invoke(plus(w.answer_args(), {"--trace-out", path})).code, cli::kExitOk);

  auto r = invoke({"trace", path});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("round 1: 5 frames seen [1, 45, 90, 135, 180]"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("round 2: 6 frames seen [1, 45, 90, 111, 135, 180]"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("retrieved frame 111 for: " + std::string(kTwoRoundQuery)), std::string::npos);
  EXPECT_NE(r.out.find("summary: answer=2 rounds=2 frames_seen=6 degraded=false\n"), std::string::npos);
  EXPECT_EQ(r.out.find("      | "), std::string::npos);

  r = invoke({"trace", "--full", path});
  EXPECT_NE(r.out.find("      | "), std::string::npos);
  EXPECT_NE(r.out.find("predict exchange"), std::string::npos) << r.out;

  EXPECT_EQ(invoke({"trace", (w.dir / "missing.jsonl").string()}).code, cli::kExitError);
}

TEST(Cli, HttpBackendKeepsKeyOutOfTraceAndReplays) {
  Workspace w;
  LocalServer local;
  std::atomic<int> hits{0};
  std::atomic<bool> authorized{true};
  local.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    authorized = authorized && req.get_header_value("Authorization") == "Bearer sk-test-secret";
    const nlohmann::json body = {
        {"choices", {{{"message", {{"role", "assistant"}, {"content", "{'final_answer': '2', 'confidence': '3'}"}}}}}}};
    res.set_content(body.dump(), "application/json");
  });
  const std::vector<std::string> args = {"answer",
                                         "--assets", (w.dir / "dough").string(),
                                         "--llm-endpoint", local.url("/v1"),
                                         "--replay-cache", (w.dir / "cache").string(),
                                         "--question", "q?", "--option", "a", "--option", "b", "--option", "c",
                                         "--trace-out", (w.dir / "h.jsonl").string()};
  const cli::Environment env = {{"FRAMEAGENT_API_KEY", "sk-test-secret"}};

  auto r = invoke(args, env);
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, "2\tc\n");
  EXPECT_EQ(hits.load(), 2);
  EXPECT_TRUE(authorized.load());
  const auto first = read_file(w.dir / "h.jsonl");
  EXPECT_EQ(first.find("sk-test-secret"), std::string::npos);
  EXPECT_EQ(read_trace(w.dir / "h.jsonl").config["backends"]["model"], "gpt-4-1106-preview");

  r = invoke(args, env);
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(hits.load(), 2);
  EXPECT_EQ(read_file(w.dir / "h.jsonl"), first);
  for (const auto& entry : std::filesystem::recursive_directory_iterator(w.dir / "cache")) {
    if (entry.is_regular_file()) {
      EXPECT_EQ(read_file(entry.path()).find("sk-test-secret"), std::string::npos);
    }
  }
}
