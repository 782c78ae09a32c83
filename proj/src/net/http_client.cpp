// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>

#include <functional>
#include <thread>

#include "beamrecall/error.hpp"
#include "beamrecall/http_client.hpp"

namespace beamrecall::net {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::BadConfig, "endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string with_retries(const Endpoint& endpoint, const RetryPolicy& retry,
                         const std::function<httplib::Result(httplib::Client&,
                                                             const std::string&)>& send) {
  const auto parts = split_url(endpoint.url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(endpoint.timeout);
  client.set_write_timeout(endpoint.timeout);
  if (!endpoint.bearer_token.empty())
    client.set_bearer_token_auth(endpoint.bearer_token);

  const int attempts = std::max(1, retry.attempts);
  auto backoff = retry.initial_backoff;
  std::string last;
  int made = 0;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    made = attempt;
    auto res = send(client, parts.path);
    if (!res) {
      last = "connection failed: " + httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      return res->body;
    } else {
      last = "HTTP " + std::to_string(res->status);
      if (res->status != 429 && res->status < 500) break;  // not transient
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw Error(ErrorCode::BackendUnreachable,
              endpoint.url + " failed after " + std::to_string(made) +
                  (made == 1 ? " attempt: " : " attempts: ") + last);
}

}  // namespace

std::string post_json(const Endpoint& endpoint, const std::string& body,
                      const RetryPolicy& retry) {
  return with_retries(endpoint, retry, [&](httplib::Client& c, const std::string& path) {
    return c.Post(path, body, "application/json");
  });
}

std::string post_multipart(const Endpoint& endpoint,
                           const std::vector<MultipartField>& fields,
                           const RetryPolicy& retry) {
  httplib::MultipartFormDataItems items;
  for (const auto& f : fields) items.push_back({f.name, f.content, f.filename, f.content_type});
  return with_retries(endpoint, retry, [&](httplib::Client& c, const std::string& path) {
    return c.Post(path, items);
  });
}

}  // namespace beamrecall::net
