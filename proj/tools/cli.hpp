// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace frameagent::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitDegraded = 2;

using Environment = std::map<std::string, std::string>;

/// Snapshot of the FRAMEAGENT_* variables of the current process.
Environment process_environment();

/// Entry point behind the `frameagent` binary: answer | bench | validate | trace.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const Environment& env = process_environment());

}  // namespace frameagent::cli
