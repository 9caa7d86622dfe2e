// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "frameagent/errors.hpp"

namespace frameagent {

/// Retries transient failures with exponential backoff. max_retries counts
/// re-attempts, so a call makes at most max_retries + 1 attempts.
struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_delay{500};
  double backoff_factor = 2.0;
};

struct HttpResponse {
  int status = 0;  // 0 on transport failure; body then holds the reason
  std::string body;
};

using HeaderList = std::vector<std::pair<std::string, std::string>>;

/// POSTs a JSON body. Never throws for transport or HTTP errors; inspect the
/// returned status or pass it through raise_for_status().
HttpResponse http_post_json(const std::string& url, const std::string& body,
                            const HeaderList& headers = {},
                            std::chrono::seconds timeout = std::chrono::seconds(120));

/// Maps a response to the error taxonomy: transport failures, 408, 429 and
/// 5xx are transient; 401/403 are authentication failures; other non-2xx
/// statuses are permanent backend errors.
void raise_for_status(const HttpResponse& response, std::string_view what);

/// Runs `fn` until it returns without throwing TransientError or the policy
/// is exhausted. `attempts` receives the number of calls made.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn, int& attempts) -> decltype(fn()) {
  auto delay = std::chrono::duration<double, std::milli>(policy.initial_delay);
  for (attempts = 1;; ++attempts) {
    try {
      return fn();
    } catch (const TransientError& e) {
      if (attempts > policy.max_retries) {
        throw RetriesExhaustedError(std::string(e.what()) + " (after " + std::to_string(attempts) +
                                        " attempts)",
                                    attempts);
      }
    }
    if (delay.count() > 0) {
      std::this_thread::sleep_for(delay);
    }
    delay *= policy.backoff_factor;
  }
}

}  // namespace frameagent
