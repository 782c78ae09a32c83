// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <map>
#include <string>
#include <vector>

namespace beamrecall::net {

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};  // doubles per retry
};

/// Remote endpoint: full URL (http or https) plus optional bearer token.
struct Endpoint {
  std::string url;
  std::string bearer_token;
  std::chrono::seconds timeout{120};
};

struct MultipartField {
  std::string name;
  std::string content;
  std::string filename;  // empty for plain form fields
  std::string content_type;
};

/// POSTs a body and returns the 2xx response body. Connection failures,
/// 429 and 5xx responses are retried with exponential backoff; other
/// statuses fail at once. Throws Error(BackendUnreachable) with the attempt
/// count and last failure in the message.
std::string post_json(const Endpoint& endpoint, const std::string& body,
                      const RetryPolicy& retry = {});

std::string post_multipart(const Endpoint& endpoint,
                           const std::vector<MultipartField>& fields,
                           const RetryPolicy& retry = {});

}  // namespace beamrecall::net
