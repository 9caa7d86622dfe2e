// SPDX-License-Identifier: Apache-2.0
// Fixtures shared by the unit tests and the acceptance runner.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "frameagent/agent.hpp"
#include "frameagent/assets.hpp"
#include "frameagent/bench.hpp"
#include "frameagent/chat.hpp"
#include "frameagent/embedder.hpp"

namespace frameagent::testing {

inline std::filesystem::path golden_path(const std::string& name) {
  return std::filesystem::path(FRAMEAGENT_GOLDEN_DIR) / name;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

// CRLF to LF, trailing newlines dropped.
inline std::string normalize_newlines(std::string text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') continue;
    out += text[i];
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

inline std::string golden(const std::string& name) { return normalize_newlines(read_file(golden_path(name))); }

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "frameagent-XXXXXX").string();
    path_ = mkdtemp(pattern.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Vector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> g;
  Vector v(dim);
  double n2 = 0;
  do {
    n2 = 0;
    for (auto& x : v) {
      x = g(rng);
      n2 += static_cast<double>(x) * x;
    }
  } while (n2 < 1e-6);
  const auto n = static_cast<float>(std::sqrt(n2));
  for (auto& x : v) x /= n;
  return v;
}

inline VideoAssets random_assets(const std::string& id, int frames, std::size_t dim, std::uint64_t seed,
                                 const std::map<FrameIndex, std::string>& overrides = {}) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> captions;
  std::vector<float> data;
  for (int k = 1; k <= frames; ++k) {
    const auto it = overrides.find(k);
    captions.push_back(it != overrides.end() ? it->second
                                             : "#C C moves around the kitchen (frame " + std::to_string(k) + ")");
    const auto v = random_unit(rng, dim);
    data.insert(data.end(), v.begin(), v.end());
  }
  return VideoAssets(id, frames, dim, std::move(captions), std::move(data));
}

inline Vector embedding_of(const VideoAssets& assets, FrameIndex frame) {
  const auto e = assets.embedding(frame);
  return {e.begin(), e.end()};
}

// The dough-making example: nine captioned frames, one question with five options.
inline CaptionMap dough_captions() {
  return {
      {1, "#C C rolls the dough on the table with both hands."},
      {28, "#C C puts the dough in the dough roller"},
      {45, "#C C walks to the doughs on the work table."},
      {76, "#C C picks dough from the baking tray"},
      {90, "#C C picks up dough"},
      {111, "#C C picks dough from the tray of doughs with both hands. "},
      {135, "#C C throws the dough on the dough roller"},
      {171, "#C C places the dough on the baking tray"},
      {180, "#C C rolls the dough on the baking table with his hands."},
  };
}

inline Question dough_question() {
  return {
      "How would you briefly describe the sequential order of the process that c performed on the dough, "
      "from initial handling to final placement on the tray?",
      {
          "Initially, c first carefully rolled the dough on the flour, then smoothly rolled it on the table, "
          "and finally, gently placed it in the awaiting tray.",
          "C first placed the dough in the tray, then rolled it on the table, and finally rolled it on the flour.",
          "Initially, c carefully rolled the dough on the table, then skillfully placed it in the tray, and "
          "ultimately, gently rolled it on the flour.",
          "Initially, c first carefully placed the dough in the tray, then gently rolled it on the flour, and "
          "ultimately smoothly rolled it on the table.",
          "C first rolled the dough on the table, then rolled it on the flour, and finally placed it in the tray.",
      },
  };
}

inline VideoAssets dough_assets(const std::string& id = "dough") {
  return random_assets(id, 180, 8, 7, dough_captions());
}

inline std::string predict_completion() { return golden("predict_completion.txt"); }

// Two rounds: the first prediction is unsure and asks for one frame in segment 3,
// the second sees frame 111 and answers with confidence 3.
inline constexpr char kTwoRoundQuery[] = "a frame showing the dough being placed in the tray";
inline constexpr int kTwoRoundAnswer = 2;

inline nlohmann::json two_round_script() {
  return {
      {"predict:1", predict_completion()},
      {"reflect:1", "The captions never show the tray.\n{'confidence': '1'}"},
      {"search:1", std::string("{'frame_descriptions': [{'segment_id': '3', 'duration': '90 - 135', "
                               "'description': '") +
                       kTwoRoundQuery + "'}]}"},
      {"predict:2", "Frame 111 shows the tray.\n{'final_answer': '2'}"},
      {"reflect:2", "{'confidence': '3'}"},
  };
}

inline std::map<std::string, Vector> two_round_table(const VideoAssets& assets) {
  return {{kTwoRoundQuery, embedding_of(assets, 111)}};
}

inline nlohmann::json table_json(const std::map<std::string, Vector>& table) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : table) j[k] = v;
  return j;
}

inline std::string dataset_line(const QAItem& item) {
  nlohmann::json j = {{"video_id", item.video_id}, {"question", item.question}, {"options", item.options}};
  if (item.answer_index) j["answer_index"] = *item.answer_index;
  if (item.qtype) j["qtype"] = *item.qtype;
  return j.dump() + "\n";
}

inline std::string dataset_text(const std::vector<QAItem>& items) {
  std::string out;
  for (const auto& item : items) out += dataset_line(item);
  return out;
}

// Ten copies of the dough question run through the two-round script; eight are
// labelled with the scripted answer.
inline std::vector<QAItem> ten_item_suite(const std::string& video_id = "dough") {
  std::vector<QAItem> items;
  const auto q = dough_question();
  for (int i = 0; i < 10; ++i) {
    QAItem item{video_id, q.text, q.options, i < 8 ? kTwoRoundAnswer : 0,
                i % 2 == 0 ? std::optional<std::string>("order") : std::nullopt};
    items.push_back(std::move(item));
  }
  return items;
}

// Half of the videos are answered confidently in round 1; the other half never
// get past confidence 1 and run all three rounds. The search queries of rounds
// 1 and 2 are planted at frames 10 and 20, inside segments 1 and 2 of the
// state at that round.
struct SelfEvalSuite {
  std::vector<QAItem> items;
  nlohmann::json script = nlohmann::json::object();
  std::map<std::string, Vector> table;
};

inline SelfEvalSuite self_eval_suite(const std::filesystem::path& dir, int count = 10) {
  SelfEvalSuite s;
  for (int i = 0; i < count; ++i) {
    const auto id = "selfeval_" + std::to_string(i);
    const auto assets = random_assets(id, 120, 8, 100 + i);
    write_assets(assets, dir / id);
    nlohmann::json entry;
    for (int r = 1; r <= 3; ++r) {
      const auto rs = std::to_string(r);
      entry["predict:" + rs] = "{'final_answer': '1'}";
      entry["reflect:" + rs] = (i % 2 == 0) ? "{'confidence': '3'}" : "{'confidence': '1'}";
    }
    for (int r = 1; r <= 2; ++r) {
      const auto query = "a cup, search " + std::to_string(r) + " in " + id;
      entry["search:" + std::to_string(r)] = "{'frame_descriptions': [{'segment_id': '" + std::to_string(r) +
                                              "', 'duration': 'xxx - xxx', 'description': '" + query + "'}]}";
      s.table[query] = embedding_of(assets, 10 * r);
    }
    s.script[id] = entry;
    s.items.push_back(QAItem{id, "What does the person pick up?", {"a plate", "a cup", "a towel"}, 1, std::nullopt});
  }
  return s;
}

// Needle suite: every bundle hides the answer in one caption placed off both
// uniform grids, and the query table points the needle query at that frame.
struct NeedleSuite {
  std::vector<QAItem> items;
  std::map<std::string, FrameIndex> needle;
  std::map<std::string, Vector> table;
};

inline constexpr char kNeedleMarker[] = "a card on the counter shows option ";

inline std::string needle_query(const std::string& video_id) { return "the card on the counter in " + video_id; }

inline NeedleSuite needle_suite(const std::filesystem::path& dir, int count = 50, int frames = 180,
                                std::uint64_t seed = 2024) {
  NeedleSuite s;
  std::mt19937_64 rng(seed);
  std::vector<FrameIndex> grid;
  for (int n : {5, 8}) {
    for (int k = 0; k < n; ++k) grid.push_back(1 + static_cast<int>(static_cast<long long>(frames - 1) * k / (n - 1)));
  }
  for (int i = 0; i < count; ++i) {
    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "needle_%02d", i);
    const std::string id = id_buf;
    FrameIndex at = 0;
    do {
      at = std::uniform_int_distribution<int>(2, frames - 1)(rng);
    } while (std::find(grid.begin(), grid.end(), at) != grid.end());
    const int answer = std::uniform_int_distribution<int>(1, 4)(rng);
    const auto assets =
        random_assets(id, frames, 8, seed + static_cast<std::uint64_t>(i) + 1,
                      {{at, std::string(kNeedleMarker) + std::to_string(answer)}});
    write_assets(assets, dir / id);
    s.needle[id] = at;
    s.table[needle_query(id)] = embedding_of(assets, at);
    s.items.push_back(QAItem{id, "Which option is written on the card on the counter?",
                             {"option 0", "option 1", "option 2", "option 3", "option 4"}, answer, "needle"});
  }
  return s;
}

// Answers correctly only when the needle caption is in the prompt, is confident
// only then, and always searches the segment that holds the needle.
inline std::string needle_oracle_reply(const NeedleSuite& suite, const ChatRequest& request) {
  const auto& prompt = request.messages.back().content;
  const auto hit = prompt.find(kNeedleMarker);
  const bool present = hit != std::string::npos;
  switch (request.kind) {
    case PromptKind::Predict: {
      const auto answer = present ? prompt.substr(hit + std::strlen(kNeedleMarker), 1) : "0";
      return "Looking at the captions.\n{'final_answer': '" + answer + "'}";
    }
    case PromptKind::Reflect:
      return present ? "{'confidence': '3'}" : "{'confidence': '1'}";
    case PromptKind::Search:
      break;
  }
  static const std::regex frame_key("'frame (\\d+)': '");
  std::vector<FrameIndex> seen;
  const auto map_end = prompt.find('\n', prompt.find("{'frame "));
  const std::string map = prompt.substr(0, map_end);
  for (std::sregex_iterator it(map.begin(), map.end(), frame_key), end; it != end; ++it) {
    seen.push_back(std::stoi((*it)[1].str()));
  }
  const auto at = suite.needle.at(request.context);
  int segment = 0;
  for (std::size_t k = 1; k < seen.size(); ++k) {
    if (seen[k - 1] < at && at < seen[k]) segment = static_cast<int>(k);
  }
  return "{'frame_descriptions': [{'segment_id': '" + std::to_string(segment) +
         "', 'duration': 'xxx - xxx', 'description': '" + needle_query(request.context) + "'}]}";
}

// Printable noise with no braces, so nothing in it can parse as a map literal.
inline std::string garbage(std::mt19937_64& rng, std::size_t max_len = 200) {
  std::uniform_int_distribution<int> len(0, static_cast<int>(max_len));
  std::uniform_int_distribution<int> ch(32, 126);
  std::string out;
  for (int n = len(rng); n > 0; --n) {
    char c = static_cast<char>(ch(rng));
    if (c == '{' || c == '}') c = '#';
    out += c;
  }
  return out;
}

}  // namespace frameagent::testing
