// SPDX-License-Identifier: Apache-2.0
#include "frameagent/bench.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iterator>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "frameagent/errors.hpp"
#include "frameagent/trace.hpp"

namespace frameagent {

std::vector<QAItem> parse_dataset(std::string_view text) {
  std::vector<QAItem> items;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    const auto fail = [&](const std::string& why) {
      return Error("dataset line " + std::to_string(line_no) + ": " + why);
    };
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw fail("not a JSON object");
    if (!j.contains("video_id") || !j["video_id"].is_string()) throw fail("missing string video_id");
    if (!j.contains("question") || !j["question"].is_string()) throw fail("missing string question");
    if (!j.contains("options") || !j["options"].is_array()) throw fail("missing options list");

    QAItem item;
    item.video_id = j["video_id"].get<std::string>();
    item.question = j["question"].get<std::string>();
    for (const auto& o : j["options"]) {
      if (!o.is_string()) throw fail("options must be strings");
      item.options.push_back(o.get<std::string>());
    }
    if (item.options.size() < 2) throw fail("need at least 2 options");
    if (j.contains("answer_index") && !j["answer_index"].is_null()) {
      if (!j["answer_index"].is_number_integer()) throw fail("answer_index must be an integer");
      const int a = j["answer_index"].get<int>();
      if (a < 0 || a >= static_cast<int>(item.options.size())) {
        throw fail("answer_index " + std::to_string(a) + " out of range for " +
                   std::to_string(item.options.size()) + " options");
      }
      item.answer_index = a;
    }
    if (j.contains("qtype") && !j["qtype"].is_null()) {
      if (!j["qtype"].is_string()) throw fail("qtype must be a string");
      item.qtype = j["qtype"].get<std::string>();
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<QAItem> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_dataset(text);
}

Metrics aggregate(std::span<const QAItem> items, std::vector<ItemOutcome> outcomes) {
  std::sort(outcomes.begin(), outcomes.end(),
            [](const ItemOutcome& a, const ItemOutcome& b) { return a.item < b.item; });
  Metrics m;
  m.items = items.size();
  double frames = 0, rounds = 0;
  for (const auto& o : outcomes) {
    if (o.skipped) {
      ++m.skipped;
      continue;
    }
    ++m.evaluated;
    frames += o.frames;
    rounds += o.rounds;
    m.min_frames = m.evaluated == 1 ? o.frames : std::min(m.min_frames, o.frames);
    m.max_frames = std::max(m.max_frames, o.frames);
    if (o.degraded) ++m.degraded;
    if (o.correct) {
      const auto& qtype = items[o.item].qtype;
      auto& bucket = m.per_qtype[qtype ? *qtype : kUntypedBucket];
      ++m.labeled;
      ++bucket.labeled;
      if (*o.correct) {
        ++m.correct;
        ++bucket.correct;
      }
    }
  }
  if (m.evaluated > 0) {
    m.mean_frames = frames / static_cast<double>(m.evaluated);
    m.mean_rounds = rounds / static_cast<double>(m.evaluated);
  }
  if (m.labeled > 0) m.accuracy = static_cast<double>(m.correct) / static_cast<double>(m.labeled);
  for (auto& [_, b] : m.per_qtype) {
    b.accuracy = static_cast<double>(b.correct) / static_cast<double>(b.labeled);
  }
  m.outcomes = std::move(outcomes);
  return m;
}

nlohmann::json to_json(const Metrics& m) {
  nlohmann::json per_qtype = nlohmann::json::object();
  for (const auto& [k, b] : m.per_qtype) {
    per_qtype[k] = {{"accuracy", b.accuracy}, {"correct", b.correct}, {"labeled", b.labeled}};
  }
  auto skipped = nlohmann::json::array();
  for (const auto& o : m.outcomes) {
    if (o.skipped) skipped.push_back({{"item", o.item}, {"reason", o.skip_reason}});
  }
  return {
      {"items", m.items},
      {"evaluated", m.evaluated},
      {"skipped", m.skipped},
      {"skipped_items", std::move(skipped)},
      {"labeled", m.labeled},
      {"correct", m.correct},
      {"accuracy", m.accuracy},
      {"per_qtype", std::move(per_qtype)},
      {"mean_frames", m.mean_frames},
      {"min_frames", m.min_frames},
      {"max_frames", m.max_frames},
      {"mean_rounds", m.mean_rounds},
      {"degraded", m.degraded},
  };
}

namespace {

class AssetCache {
 public:
  explicit AssetCache(std::filesystem::path root) : root_(std::move(root)) {}

  std::shared_ptr<const VideoAssets> get(const std::string& video_id) {
    {
      std::lock_guard lock(mu_);
      if (auto it = cache_.find(video_id); it != cache_.end()) return it->second;
    }
    auto loaded = std::make_shared<const VideoAssets>(load_assets(root_ / video_id));
    std::lock_guard lock(mu_);
    return cache_.emplace(video_id, std::move(loaded)).first->second;
  }

 private:
  std::filesystem::path root_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const VideoAssets>> cache_;
};

using ItemFn = std::function<ItemOutcome(std::size_t, const QAItem&, const VideoAssets&)>;

// Evaluates every item with at most `options.workers` threads; outcomes keep
// dataset order regardless of completion order.
Metrics run_items(std::span<const QAItem> items, const EvalOptions& options, const ItemFn& fn) {
  AssetCache assets(options.assets_dir);
  std::vector<ItemOutcome> outcomes(items.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex failure_mu;

  const auto worker = [&] {
    while (!abort) {
      const auto i = next++;
      if (i >= items.size()) return;
      try {
        const auto bundle = assets.get(items[i].video_id);
        outcomes[i] = fn(i, items[i], *bundle);
      } catch (const Error& e) {
        if (options.fail_fast) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
          abort = true;
          return;
        }
        ItemOutcome skipped;
        skipped.skipped = true;
        skipped.skip_reason = e.what();
        outcomes[i] = std::move(skipped);
      }
      outcomes[i].item = i;
    }
  };

  const auto n = std::max<std::size_t>(1, std::min(options.workers, items.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return aggregate(items, std::move(outcomes));
}

std::optional<bool> judge(const QAItem& item, int answer) {
  if (!item.answer_index) return std::nullopt;
  return *item.answer_index == answer;
}

}  // namespace

Metrics evaluate(std::span<const QAItem> items, const LoopConfig& config, Backends& backends,
                 const EvalOptions& options) {
  config.validate();
  if (options.trace_dir) std::filesystem::create_directories(*options.trace_dir);
  return run_items(items, options, [&](std::size_t i, const QAItem& item, const VideoAssets& assets) {
    auto result = run(item.as_question(), assets, config, backends);
    if (options.trace_dir) {
      std::ostringstream name;
      name << std::setw(5) << std::setfill('0') << i << "_" << item.video_id << ".jsonl";
      write_trace(result.trace, *options.trace_dir / name.str());
    }
    ItemOutcome o;
    o.answer = result.answer;
    o.frames = result.trace.frames_seen;
    o.rounds = static_cast<int>(result.trace.rounds.size());
    o.degraded = result.trace.degraded;
    o.correct = judge(item, result.answer);
    return o;
  });
}

Metrics uniform_baseline(std::span<const QAItem> items, int budget, const LoopConfig& config,
                         Backends& backends, const EvalOptions& options) {
  if (budget < 2) throw PreconditionError("uniform baseline budget must be at least 2");
  return run_items(items, options, [&](std::size_t, const QAItem& item, const VideoAssets& assets) {
    const int frames = std::min(budget, assets.frame_count());
    const auto state = init_state(assets, frames, backends.captioner, config.caption_window);
    const int num_options = static_cast<int>(item.options.size());
    auto asked = ask_parsed<AnswerParse>(
        backends.llm,
        make_request(render_predict_prompt(state, item.as_question(), {config.fps, config.caption_char_cap}),
                     1, config.decoding, assets.video_id()),
        config.parse_retries, [&](const std::string& raw) { return parse_answer(raw, num_options); });
    ItemOutcome o;
    o.answer = asked.value ? asked.value->index : 0;
    o.degraded = !asked.value;
    o.frames = frames;
    o.rounds = 1;
    o.correct = judge(item, o.answer);
    return o;
  });
}

std::optional<SweepAxis> parse_sweep_axis(std::string_view name) {
  for (auto axis : {SweepAxis::Rounds, SweepAxis::InitFrames, SweepAxis::Budget}) {
    if (to_string(axis) == name) return axis;
  }
  return std::nullopt;
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Rounds:
      return "rounds";
    case SweepAxis::InitFrames:
      return "init_frames";
    case SweepAxis::Budget:
      return "budget";
  }
  return "unknown";
}

std::vector<SweepRow> sweep(std::span<const QAItem> items, SweepAxis axis, std::span<const int> values,
                            const LoopConfig& base, Backends& backends, const EvalOptions& options) {
  if (values.empty()) throw PreconditionError("sweep needs at least one value");
  std::vector<SweepRow> rows;
  for (int v : values) {
    auto config = base;
    switch (axis) {
      case SweepAxis::Rounds:
        config.max_rounds = v;
        rows.push_back({axis, v, evaluate(items, config, backends, options)});
        break;
      case SweepAxis::InitFrames:
        config.initial_frames = v;
        rows.push_back({axis, v, evaluate(items, config, backends, options)});
        break;
      case SweepAxis::Budget:
        rows.push_back({axis, v, uniform_baseline(items, v, config, backends, options)});
        break;
    }
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "axis,value,items,evaluated,skipped,accuracy,mean_frames,min_frames,max_frames,mean_rounds,"
         "degraded\n";
  out << std::fixed;
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << to_string(r.axis) << ',' << r.value << ',' << m.items << ',' << m.evaluated << ','
        << m.skipped << ',' << std::setprecision(4) << m.accuracy << ',' << m.mean_frames << ','
        << m.min_frames << ',' << m.max_frames << ',' << m.mean_rounds << ',' << m.degraded << '\n';
  }
  return out.str();
}

double cost_fraction(const CostParams& p) {
  for (double v : {p.total_frames, p.selected_frames, p.embed_seconds, p.caption_seconds,
                   p.controller_seconds, p.rounds}) {
    if (v < 0) throw PreconditionError("cost parameters must be non-negative");
  }
  const double embedding = p.total_frames * p.embed_seconds + p.selected_frames * p.embed_seconds;
  const double total =
      embedding + p.selected_frames * p.caption_seconds + p.rounds * p.controller_seconds;
  if (total <= 0) throw PreconditionError("cost model denominator is zero");
  return embedding / total;
}

}  // namespace frameagent
