// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <string_view>

#include "frameagent/agent.hpp"

namespace frameagent {

/// Trace file layout: one JSON object per line, one per round, followed by a
/// summary object {"answer", "rounds", "frames_seen", "degraded", ...}.
///
/// Per-round wall-clock timing is only written when `include_timing` is set,
/// so default traces of a replayed run are byte-identical.
std::string to_jsonl(const RunTrace& trace, bool include_timing = false);

/// Inverse of to_jsonl(). Throws Error on malformed input.
RunTrace parse_trace(std::string_view text);
RunTrace read_trace(const std::filesystem::path& path);
void write_trace(const RunTrace& trace, const std::filesystem::path& path, bool include_timing = false);

/// SHA-256 of the timing-free serialization.
std::string trace_hash(const RunTrace& trace);

nlohmann::json round_to_json(const RoundRecord& record, bool include_timing);
nlohmann::json summary_to_json(const RunTrace& trace);

/// JSON dump that replaces invalid UTF-8 instead of throwing.
std::string dump_json(const nlohmann::json& j, int indent = -1);

}  // namespace frameagent
