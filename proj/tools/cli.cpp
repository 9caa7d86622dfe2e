// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include "frameagent/agent.hpp"
#include "frameagent/assets.hpp"
#include "frameagent/bench.hpp"
#include "frameagent/captioner.hpp"
#include "frameagent/chat.hpp"
#include "frameagent/embedder.hpp"
#include "frameagent/errors.hpp"
#include "frameagent/trace.hpp"

extern char** environ;

namespace frameagent::cli {

namespace {

constexpr char kEnvPrefix[] = "FRAMEAGENT_";
constexpr char kApiKeyEnv[] = "FRAMEAGENT_API_KEY";

struct Options {
  // Backends.
  std::string llm_endpoint;
  std::string model = "gpt-4-1106-preview";
  std::string embed_endpoint;
  std::string embed_table;
  std::size_t embed_dim = 0;  // 0: take the bundle's dimension
  std::uint64_t embed_seed = 0;
  std::string caption_endpoint;
  std::string mock_script;
  std::string replay_cache;
  int retry_delay_ms = 500;

  // Agent loop.
  LoopConfig loop;
  bool no_self_eval = false;
  bool no_segments = false;
  std::int64_t seed = -1;
  int max_tokens = 0;

  // Command inputs.
  std::string assets;
  std::string question;
  std::vector<std::string> options;
  std::string trace_out;
  bool trace_timing = false;
  std::string dataset;
  std::size_t workers = 1;
  std::string axis;
  std::vector<int> values;
  int budget = 0;
  std::string metrics_out;
  std::string csv_out;
  std::string trace_dir;
  bool fail_fast = false;
  std::string target;
  bool full = false;
};

// Options that may also come from FRAMEAGENT_<NAME> variables.
struct EnvOption {
  std::string flag;
  bool is_switch;
};

const std::vector<EnvOption>& env_options() {
  static const std::vector<EnvOption> kOptions = {
      {"--llm-endpoint", false},   {"--model", false},          {"--embed-endpoint", false},
      {"--embed-table", false},    {"--embed-dim", false},      {"--embed-seed", false},
      {"--caption-endpoint", false}, {"--caption-window", false}, {"--mock-script", false},
      {"--replay-cache", false},   {"--retry-delay-ms", false}, {"--init-frames", false},
      {"--max-rounds", false},     {"--confidence-threshold", false}, {"--max-queries", false},
      {"--no-self-eval", true},    {"--no-segments", true},     {"--parse-retries", false},
      {"--net-retries", false},    {"--temperature", false},    {"--seed", false},
      {"--max-tokens", false},     {"--caption-char-cap", false}, {"--workers", false},
  };
  return kOptions;
}

std::string env_name(const std::string& flag) {
  std::string out = kEnvPrefix;
  for (char c : flag.substr(2)) {
    out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

bool truthy(std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  return v == "1" || v == "true" || v == "yes" || v == "on";
}

// Command line beats environment beats config file: environment values are
// appended as ordinary arguments for flags the user did not pass, and CLI11
// already lets arguments override the config file.
std::vector<std::string> with_environment(std::vector<std::string> args, const Environment& env) {
  const auto given = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  std::vector<std::string> extra;
  for (const auto& opt : env_options()) {
    const auto it = env.find(env_name(opt.flag));
    if (it == env.end() || given(opt.flag)) continue;
    if (opt.is_switch) {
      if (truthy(it->second)) extra.push_back(opt.flag);
    } else {
      extra.push_back(opt.flag + "=" + it->second);
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

void add_shared_options(CLI::App& app, Options& o) {
  app.add_option("--assets", o.assets, "Asset bundle (answer) or directory of bundles (bench)");
  app.add_option("--llm-endpoint", o.llm_endpoint, "OpenAI-compatible chat endpoint base URL");
  app.add_option("--model", o.model, "Chat model name")->capture_default_str();
  app.add_option("--embed-endpoint", o.embed_endpoint, "Text embedding endpoint URL");
  app.add_option("--embed-table", o.embed_table, "JSON table of precomputed query embeddings");
  app.add_option("--embed-dim", o.embed_dim, "Hash embedder dimension (default: bundle dimension)");
  app.add_option("--embed-seed", o.embed_seed, "Hash embedder seed");
  app.add_option("--caption-endpoint", o.caption_endpoint, "On-demand captioning endpoint URL");
  app.add_option("--caption-window", o.loop.caption_window, "Caption clip half-width in frames");
  app.add_option("--mock-script", o.mock_script, "Scripted chat responses (JSON)");
  app.add_option("--replay-cache", o.replay_cache, "Directory of cached chat responses");
  app.add_option("--retry-delay-ms", o.retry_delay_ms, "Initial transport retry backoff");
  app.add_option("--init-frames", o.loop.initial_frames, "Uniformly sampled initial frames")
      ->capture_default_str();
  app.add_option("--max-rounds", o.loop.max_rounds, "Maximum rounds")->capture_default_str();
  app.add_option("--confidence-threshold", o.loop.confidence_threshold,
                 "Answer once confidence reaches this level (1-3)")
      ->capture_default_str();
  app.add_option("--max-queries", o.loop.max_queries_per_round, "Retrieval queries per round")
      ->capture_default_str();
  app.add_flag("--no-self-eval", o.no_self_eval, "Skip self-reflection; search until the last round");
  app.add_flag("--no-segments", o.no_segments, "Retrieve over the whole video instead of segments");
  app.add_option("--parse-retries", o.loop.parse_retries, "Re-asks after unparsable output")
      ->capture_default_str();
  app.add_option("--net-retries", o.loop.network_retries, "Transport retries per call")
      ->capture_default_str();
  app.add_option("--temperature", o.loop.decoding.temperature, "Sampling temperature")
      ->capture_default_str();
  app.add_option("--seed", o.seed, "Decoding seed sent to the backend (-1: none)");
  app.add_option("--max-tokens", o.max_tokens, "Completion token limit (0: none)");
  app.add_option("--caption-char-cap", o.loop.caption_char_cap, "Per-caption byte cap (0: none)");
  app.add_option("--workers", o.workers, "Concurrent questions (bench)")->capture_default_str();
}

struct BackendSet {
  std::unique_ptr<ChatBackend> chat;
  std::unique_ptr<ReplayCache> cache;
  std::unique_ptr<LlmClient> llm;
  std::unique_ptr<TextEmbedder> embedder;
  std::unique_ptr<Captioner> captioner;
  nlohmann::json description = nlohmann::json::object();

  Backends view() { return {*llm, *embedder, *captioner}; }
};

BackendSet make_backends(const Options& o, std::size_t bundle_dim, const Environment& env) {
  BackendSet b;
  const RetryPolicy retry{o.loop.network_retries, std::chrono::milliseconds(o.retry_delay_ms), 2.0};

  if (!o.mock_script.empty()) {
    b.chat = std::make_unique<ScriptedChatBackend>(ScriptedChatBackend::from_file(o.mock_script));
    b.description["llm"] = "mock:" + o.mock_script;
  } else if (!o.llm_endpoint.empty()) {
    const auto key = env.find(kApiKeyEnv);
    b.chat = std::make_unique<OpenAIChatBackend>(o.llm_endpoint, o.model,
                                                 key == env.end() ? "" : key->second);
    b.description["llm"] = "http:" + o.llm_endpoint;
    b.description["model"] = o.model;
  } else {
    throw PreconditionError("no chat backend: pass --llm-endpoint or --mock-script");
  }
  ChatBackend* chat = b.chat.get();
  if (!o.replay_cache.empty()) {
    b.cache = std::make_unique<ReplayCache>(*b.chat, o.replay_cache, o.mock_script.empty() ? o.model : "");
    chat = b.cache.get();
    b.description["replay_cache"] = o.replay_cache;
  }
  b.llm = std::make_unique<LlmClient>(*chat, retry);

  if (!o.embed_endpoint.empty()) {
    b.embedder = std::make_unique<HttpEmbedder>(o.embed_endpoint, retry);
    b.description["embedder"] = "http:" + o.embed_endpoint;
  } else if (!o.embed_table.empty()) {
    b.embedder = std::make_unique<TableEmbedder>(TableEmbedder::from_file(o.embed_table));
    b.description["embedder"] = "table:" + o.embed_table;
  } else {
    const auto dim = o.embed_dim != 0 ? o.embed_dim : bundle_dim;
    b.embedder = std::make_unique<HashEmbedder>(dim, o.embed_seed);
    b.description["embedder"] = "hash:dim=" + std::to_string(dim) + ",seed=" + std::to_string(o.embed_seed);
  }

  if (!o.caption_endpoint.empty()) {
    b.captioner = std::make_unique<HttpCaptioner>(o.caption_endpoint, retry);
    b.description["captioner"] = "http:" + o.caption_endpoint;
  } else {
    b.captioner = std::make_unique<StoreCaptioner>();
    b.description["captioner"] = "store";
  }
  return b;
}

LoopConfig loop_config(const Options& o) {
  auto c = o.loop;
  c.self_evaluation = !o.no_self_eval;
  c.segment_selection = !o.no_segments;
  if (o.seed >= 0) c.decoding.seed = o.seed;
  if (o.max_tokens > 0) c.decoding.max_tokens = o.max_tokens;
  c.validate();
  return c;
}

int cmd_answer(const Options& o, std::ostream& out, std::ostream& err, const Environment& env) {
  if (o.assets.empty()) {
    err << "error: --assets is required\n";
    return kExitError;
  }
  if (o.question.empty() || o.options.size() < 2) {
    err << "error: --question and at least two --option values are required\n";
    return kExitError;
  }
  const auto config = loop_config(o);
  const auto assets = load_assets(o.assets);
  auto backends = make_backends(o, assets.dim(), env);
  auto view = backends.view();

  RunResult result;
  try {
    result = run({o.question, o.options}, assets, config, view);
  } catch (const RunError& e) {
    if (!o.trace_out.empty()) write_trace(e.partial_trace(), o.trace_out, o.trace_timing);
    throw;
  }
  result.trace.config = {{"loop", to_json(config)}, {"backends", backends.description}};
  if (!o.trace_out.empty()) write_trace(result.trace, o.trace_out, o.trace_timing);

  out << result.answer << '\t' << o.options[static_cast<std::size_t>(result.answer)] << '\n';
  if (result.trace.degraded) {
    err << "warning: answer came from a parse fallback (degraded run)\n";
    return kExitDegraded;
  }
  return kExitOk;
}

std::string summary_line(const Metrics& m) {
  std::ostringstream s;
  s << std::fixed << "acc=" << std::setprecision(3) << m.accuracy << " frames=" << std::setprecision(1)
    << m.mean_frames << " rounds=" << m.mean_rounds;
  return s.str();
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err, const Environment& env) {
  if (o.dataset.empty() || o.assets.empty()) {
    err << "error: --dataset and --assets are required\n";
    return kExitError;
  }
  const auto items = load_dataset(o.dataset);
  if (items.empty()) {
    err << "error: dataset " << o.dataset << " has no items\n";
    return kExitError;
  }
  const auto config = loop_config(o);

  std::size_t dim = o.embed_dim;
  if (dim == 0 && o.embed_endpoint.empty() && o.embed_table.empty()) {
    for (const auto& item : items) {
      try {
        dim = read_assets(std::filesystem::path(o.assets) / item.video_id).dim();
        break;
      } catch (const AssetError&) {
      }
    }
    if (dim == 0) throw AssetError("no readable asset bundle under " + o.assets);
  }
  auto backends = make_backends(o, dim, env);
  auto view = backends.view();

  EvalOptions eval;
  eval.assets_dir = o.assets;
  eval.workers = o.workers;
  eval.fail_fast = o.fail_fast;
  if (!o.trace_dir.empty()) eval.trace_dir = o.trace_dir;

  std::vector<SweepRow> rows;
  if (!o.axis.empty()) {
    const auto axis = parse_sweep_axis(o.axis);
    if (!axis) {
      err << "error: --axis must be rounds, init_frames or budget\n";
      return kExitError;
    }
    if (o.values.empty()) {
      err << "error: --axis needs --values\n";
      return kExitError;
    }
    rows = sweep(items, *axis, o.values, config, view, eval);
  } else if (o.budget > 0) {
    rows.push_back({SweepAxis::Budget, o.budget, uniform_baseline(items, o.budget, config, view, eval)});
  } else {
    rows.push_back({SweepAxis::Rounds, config.max_rounds, evaluate(items, config, view, eval)});
  }

  bool degraded = false;
  auto metrics_json = nlohmann::json::array();
  for (const auto& row : rows) {
    if (rows.size() > 1 || !o.axis.empty()) {
      out << to_string(row.axis) << '=' << row.value << ' ';
    }
    out << summary_line(row.metrics) << '\n';
    if (row.metrics.skipped > 0) {
      err << "warning: " << row.metrics.skipped << " item(s) skipped\n";
    }
    degraded = degraded || row.metrics.degraded > 0;
    auto j = to_json(row.metrics);
    j["axis"] = to_string(row.axis);
    j["value"] = row.value;
    metrics_json.push_back(std::move(j));
  }

  if (!o.metrics_out.empty()) {
    const nlohmann::json doc = {
        {"config", {{"loop", to_json(config)}, {"backends", backends.description}}},
        {"rows", metrics_json},
    };
    std::ofstream(o.metrics_out) << dump_json(doc, 2) << '\n';
  }
  if (!o.csv_out.empty()) {
    std::ofstream(o.csv_out) << sweep_csv(rows);
  }
  return degraded ? kExitDegraded : kExitOk;
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<std::string> problems;
  try {
    const auto assets = read_assets(o.target);
    for (const auto& v : validate_assets(assets)) problems.push_back(v.message);
  } catch (const AssetError& e) {
    problems.emplace_back(e.what());
  }
  if (problems.empty()) {
    out << "OK\n";
    return kExitOk;
  }
  for (const auto& p : problems) out << "violation: " << p << '\n';
  err << problems.size() << " violation(s) in " << o.target << '\n';
  return kExitError;
}

void print_block(std::ostream& out, const std::string& text) {
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) out << "      | " << line << '\n';
}

int cmd_trace(const Options& o, std::ostream& out) {
  const auto trace = read_trace(o.target);
  if (!trace.video_id.empty()) out << "video " << trace.video_id << '\n';
  if (!trace.question.text.empty()) out << "question: " << trace.question.text << '\n';
  for (const auto& r : trace.rounds) {
    out << "round " << r.round << ": " << r.captions.size() << " frames seen [";
    bool first = true;
    for (const auto& [frame, _] : r.captions) {
      out << (first ? "" : ", ") << frame;
      first = false;
    }
    out << "]\n";
    out << "  prediction: " << r.prediction << (r.prediction_fallback ? " (fallback)" : "") << '\n';
    if (r.confidence) {
      out << "  confidence: " << *r.confidence << (r.confidence_fallback ? " (fallback)" : "") << '\n';
    }
    out << "  action: " << r.action << " (" << r.reason << ")\n";
    for (const auto& item : r.plan.items) {
      out << "  query [segment " << item.segment_id << "]: " << item.query << '\n';
    }
    for (const auto& hit : r.observation.retrieved) {
      out << "  retrieved frame " << hit.frame << " for: " << hit.query << '\n';
    }
    if (o.full) {
      for (const auto& e : r.exchanges) {
        out << "  " << to_string(e.kind) << " exchange (" << e.attempts << " attempt"
            << (e.attempts == 1 ? "" : "s") << ")\n";
        for (const auto& m : e.messages) {
          out << "    " << m.role << ":\n";
          print_block(out, m.content);
        }
        out << "    response:\n";
        print_block(out, e.response);
      }
    } else {
      out << "  " << r.exchanges.size() << " model call(s); --full shows prompts\n";
    }
  }
  out << "summary: answer=" << trace.answer << " rounds=" << trace.rounds.size()
      << " frames_seen=" << trace.frames_seen << " degraded=" << (trace.degraded ? "true" : "false")
      << '\n';
  return kExitOk;
}

}  // namespace

Environment process_environment() {
  Environment env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    const std::string entry(*e);
    if (entry.rfind(kEnvPrefix, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq != std::string::npos) env.emplace(entry.substr(0, eq), entry.substr(eq + 1));
  }
  return env;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err,
        const Environment& env) {
  Options o;
  CLI::App app{"Long-video question answering by iterative frame selection", "frameagent"};
  app.set_config("--config", "", "TOML/INI file with option defaults");
  app.require_subcommand(1);
  add_shared_options(app, o);

  auto* answer = app.add_subcommand("answer", "Answer one multiple-choice question")->fallthrough();
  answer->add_option("--question", o.question, "Question text");
  answer->add_option("--option", o.options, "Answer option (repeat, in order)");
  answer->add_option("--trace-out", o.trace_out, "Write the run trace (JSON lines)");
  answer->add_flag("--trace-timing", o.trace_timing, "Include wall-clock timing in the trace");

  auto* bench = app.add_subcommand("bench", "Evaluate a dataset, optionally sweeping one axis")->fallthrough();
  bench->add_option("--dataset", o.dataset, "Dataset file (JSON lines)");
  bench->add_option("--axis", o.axis, "Sweep axis: rounds | init_frames | budget");
  bench->add_option("--values", o.values, "Comma-separated sweep values")->delimiter(',');
  bench->add_option("--budget", o.budget, "Run the uniform-sampling baseline with this many frames");
  bench->add_option("--metrics-out", o.metrics_out, "Write metrics JSON");
  bench->add_option("--csv-out", o.csv_out, "Write per-row CSV");
  bench->add_option("--trace-dir", o.trace_dir, "Write one trace file per question");
  bench->add_flag("--fail-fast", o.fail_fast, "Abort on the first failing item");

  auto* validate = app.add_subcommand("validate", "Check an asset bundle")->fallthrough();
  validate->add_option("bundle", o.target, "Bundle directory")->required();

  auto* trace = app.add_subcommand("trace", "Pretty-print a run trace")->fallthrough();
  trace->add_option("file", o.target, "Trace file")->required();
  trace->add_flag("--full", o.full, "Show prompts and raw responses");

  const auto args = with_environment(raw_args, env);
  std::vector<const char*> argv = {"frameagent"};
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*answer) return cmd_answer(o, out, err, env);
    if (*bench) return cmd_bench(o, out, err, env);
    if (*validate) return cmd_validate(o, out, err);
    if (*trace) return cmd_trace(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace frameagent::cli
