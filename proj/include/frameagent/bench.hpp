// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "frameagent/agent.hpp"

namespace frameagent {

struct QAItem {
  std::string video_id;
  std::string question;
  std::vector<std::string> options;
  std::optional<int> answer_index;
  std::optional<std::string> qtype;

  Question as_question() const { return {question, options}; }
  friend bool operator==(const QAItem&, const QAItem&) = default;
};

/// Line-delimited JSON records
/// {"video_id", "question", "options", "answer_index"?, "qtype"?}.
/// Blank lines are skipped; a malformed record throws Error with its line.
std::vector<QAItem> parse_dataset(std::string_view text);
std::vector<QAItem> load_dataset(const std::filesystem::path& path);

struct ItemOutcome {
  std::size_t item = 0;
  bool skipped = false;
  std::string skip_reason;
  int answer = 0;
  int frames = 0;
  int rounds = 0;
  bool degraded = false;
  std::optional<bool> correct;  // absent for unlabeled items
};

struct QtypeStats {
  std::size_t correct = 0;
  std::size_t labeled = 0;
  double accuracy = 0.0;
};

inline constexpr char kUntypedBucket[] = "(none)";

struct Metrics {
  std::size_t items = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::size_t labeled = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;  // correct / labeled over evaluated items
  std::map<std::string, QtypeStats> per_qtype;
  double mean_frames = 0.0;
  int min_frames = 0;
  int max_frames = 0;
  double mean_rounds = 0.0;
  std::size_t degraded = 0;
  std::vector<ItemOutcome> outcomes;  // in dataset order
};

/// Folds per-item outcomes into Metrics. Order of `outcomes` does not matter.
Metrics aggregate(std::span<const QAItem> items, std::vector<ItemOutcome> outcomes);
nlohmann::json to_json(const Metrics& metrics);

struct EvalOptions {
  std::filesystem::path assets_dir;  // one bundle per video id underneath
  std::size_t workers = 1;
  bool fail_fast = false;             // otherwise failed items are skipped and counted
  std::optional<std::filesystem::path> trace_dir;
};

/// Runs the agent on every item with a bounded worker pool.
Metrics evaluate(std::span<const QAItem> items, const LoopConfig& config, Backends& backends,
                 const EvalOptions& options);

/// Single predict call on min(budget, L) uniformly sampled captions.
Metrics uniform_baseline(std::span<const QAItem> items, int budget, const LoopConfig& config,
                         Backends& backends, const EvalOptions& options);

enum class SweepAxis { Rounds, InitFrames, Budget };

std::optional<SweepAxis> parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis);

struct SweepRow {
  SweepAxis axis;
  int value = 0;
  Metrics metrics;
};

/// One Metrics row per value. Rounds and init_frames vary the agent;
/// budget runs the uniform baseline.
std::vector<SweepRow> sweep(std::span<const QAItem> items, SweepAxis axis, std::span<const int> values,
                            const LoopConfig& base, Backends& backends, const EvalOptions& options);

std::string sweep_csv(std::span<const SweepRow> rows);

/// Retrieval-time cost model: N frames per video, n selected frames, x
/// seconds per embedded image or text, y seconds per caption, z seconds per
/// controller round, t rounds.
struct CostParams {
  double total_frames = 0;
  double selected_frames = 0;
  double embed_seconds = 0;
  double caption_seconds = 0;
  double controller_seconds = 0;
  double rounds = 0;
};

/// (N x + n x) / (N x + n x + n y + t z). Throws PreconditionError on a
/// negative field or a zero denominator.
double cost_fraction(const CostParams& p);

}  // namespace frameagent
