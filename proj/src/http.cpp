// SPDX-License-Identifier: Apache-2.0
#include "frameagent/http.hpp"

#include <httplib.h>

namespace frameagent {

namespace {

// Splits "http://host:port/some/path" into the client base and the path.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', host_start);
  if (slash == std::string::npos) {
    return {url, "/"};
  }
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

HttpResponse http_post_json(const std::string& url, const std::string& body,
                            const HeaderList& headers, std::chrono::seconds timeout) {
  const auto [base, path] = split_url(url);
  httplib::Client client(base);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) {
    hdrs.emplace(k, v);
  }
  auto result = client.Post(path, hdrs, body, "application/json");
  if (!result) {
    return {0, "transport error: " + httplib::to_string(result.error())};
  }
  return {result->status, result->body};
}

void raise_for_status(const HttpResponse& response, std::string_view what) {
  const int s = response.status;
  if (s >= 200 && s < 300) return;
  const std::string prefix(what);
  if (s == 0) {
    throw TransientError(prefix + ": " + response.body);
  }
  const std::string detail = prefix + ": HTTP " + std::to_string(s);
  if (s == 401 || s == 403) {
    throw AuthenticationError(detail);
  }
  if (s == 408 || s == 429 || s >= 500) {
    throw TransientError(detail);
  }
  throw BackendError(detail);
}

}  // namespace frameagent
