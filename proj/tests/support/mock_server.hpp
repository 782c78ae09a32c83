// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

// Loopback HTTP server for exercising remote backends in tests.

#pragma once

#include <httplib.h>

#include <string>
#include <thread>

namespace fixtures {

class MockServer {
 public:
  MockServer() { port_ = server_.bind_to_any_port("127.0.0.1"); }
  ~MockServer() { stop(); }
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  httplib::Server& server() { return server_; }

  void start() {
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace fixtures
