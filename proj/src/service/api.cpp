// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <csignal>
#include <thread>

#include "beamrecall/service.hpp"

// After the Eigen-using headers: resolv.h, pulled in by httplib, defines _res.
#include <httplib.h>

namespace beamrecall::service {
namespace {

using nlohmann::json;

void send_error(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_error(res, http_status(e.code()), error_json(e));
}

double number_param(const httplib::Request& req, const std::string& name) {
  if (!req.has_param(name)) throw Error(ErrorCode::BadConfig, "missing query parameter " + name, "http");
  const auto text = req.get_param_value(name);
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::BadConfig, "query parameter " + name + " is not a number: " + text, "http");
  }
}

std::atomic<bool> g_signalled{false};

extern "C" void on_signal(int) { g_signalled = true; }

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownDirection:
    case ErrorCode::UnknownChunk:
      return 404;
    case ErrorCode::NoTopic:
    case ErrorCode::EmptyAttended:
    case ErrorCode::NoTokens:
    case ErrorCode::EmptyIndex:
      return 422;
    case ErrorCode::BadConfig:
    case ErrorCode::MalformedWav:
    case ErrorCode::UnsupportedEncoding:
    case ErrorCode::EmptyInterval:
    case ErrorCode::EmptyTensor:
    case ErrorCode::SilentInput:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::BinOutOfRange:
    case ErrorCode::DuplicateLabel:
    case ErrorCode::RateMismatch:
    case ErrorCode::ZeroReference:
    case ErrorCode::TooShort:
    case ErrorCode::UnsupportedRate:
    case ErrorCode::ChannelMismatch:
      return 400;
    case ErrorCode::BackendUnreachable:
    case ErrorCode::ProviderUnreachable:
    case ErrorCode::MalformedResponse:
      return 502;
    default:
      return 500;
  }
}

bool is_user_error(ErrorCode code) { return http_status(code) < 500; }

std::string error_json(const std::string& stage, const std::string& code, const std::string& message) {
  return json{{"stage", stage}, {"code", code}, {"message", message}}.dump();
}

std::string error_json(const Error& e) {
  return error_json(e.stage(), std::string(to_string(e.code())), e.what());
}

struct ApiServer::Impl {
  ServiceConfig config;
  Backends backends;
  SessionStore store;
  httplib::Server http;
  int port = -1;

  struct Job {
    std::string state;  // running, ready or failed
    json error;
  };
  std::mutex jobs_mutex;
  std::map<std::string, Job> jobs;
  std::vector<std::thread> workers;
  bool stopped = false;

  Impl(ServiceConfig c, Backends b)
      : config(std::move(c)), backends(std::move(b)), store(config.sessions_root) {
    routes();
  }

  IngestOptions ingest_options() const { return {config.separation, config.max_sentences}; }

  bool authorized(const httplib::Request& req) const {
    return config.api_token.empty() ||
           req.get_header_value("Authorization") == "Bearer " + config.api_token;
  }

  // Wraps a handler with auth and the structured error contract.
  template <typename F>
  httplib::Server::Handler guarded(F fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req)) {
        send_error(res, 401, error_json("auth", "Unauthorized", "missing or wrong bearer token"));
        return;
      }
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const std::exception& e) {
        send_error(res, 500, error_json("http", "Internal", e.what()));
      }
    };
  }

  void routes() {
    http.set_payload_max_length(std::size_t(4) << 30);
    // SO_REUSEADDR only: the httplib default adds SO_REUSEPORT, which would let
    // a second service silently share a busy port.
    http.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
    });
    if (!config.static_dir.empty() && std::filesystem::is_directory(config.static_dir))
      http.set_mount_point("/", config.static_dir.string());

    http.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      json arr = json::array();
      for (const auto& m : store.list()) arr.push_back(manifest_to_json(m));
      res.set_content(arr.dump(2), "application/json");
    }));

    http.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const char* audio_field = nullptr;
      for (const char* name : {"audio", "wav", "file"})
        if (req.has_file(name)) {
          audio_field = name;
          break;
        }
      if (!audio_field)
        throw Error(ErrorCode::BadConfig, "multipart field \"audio\" with the WAV is required", "http");
      const auto& wav = req.get_file_value(audio_field).content;
      const auto plan = plan_from_json(req.has_file("plan") ? req.get_file_value("plan").content : "");
      auto bytes = std::make_shared<std::vector<std::uint8_t>>(wav.begin(), wav.end());
      const auto id = SessionStore::session_id(*bytes, plan, ingest_options(), backends);
      json reply{{"session_id", id}, {"status_url", "/sessions/" + id + "/status"}};

      std::lock_guard lock(jobs_mutex);
      if (store.exists(id)) {
        reply["state"] = "ready";
        res.set_content(reply.dump(), "application/json");
        return;
      }
      auto it = jobs.find(id);
      if (it == jobs.end() || it->second.state == "failed") {
        jobs[id] = {"running", nullptr};
        workers.emplace_back([this, bytes, plan, id] {
          Job done{"ready", nullptr};
          try {
            store.ingest(*bytes, plan, ingest_options(), backends);
          } catch (const Error& e) {
            done = {"failed", json::parse(error_json(e))};
          } catch (const std::exception& e) {
            done = {"failed", json::parse(error_json("ingest", "Internal", e.what()))};
          }
          std::lock_guard inner(jobs_mutex);
          jobs[id] = std::move(done);
        });
      }
      reply["state"] = jobs[id].state;
      res.status = 202;
      res.set_content(reply.dump(), "application/json");
    }));

    http.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(manifest_to_json(store.open(req.matches[1])->manifest()).dump(2), "application/json");
    }));

    http.Get(R"(/sessions/([^/]+)/status)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.matches[1];
               json reply{{"session_id", id}};
               {
                 std::lock_guard lock(jobs_mutex);
                 if (auto it = jobs.find(id); it != jobs.end()) {
                   reply["state"] = it->second.state;
                   if (!it->second.error.is_null()) reply["error"] = it->second.error;
                 }
               }
               if (!reply.contains("state")) {
                 if (!store.exists(id)) throw Error(ErrorCode::UnknownSession, "no session " + id, "http");
                 reply["state"] = "ready";
               }
               res.set_content(reply.dump(), "application/json");
             }));

    http.Post(R"(/sessions/([^/]+)/query)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const auto session = store.open(req.matches[1]);
                json body;
                try {
                  body = json::parse(req.body);
                } catch (const json::exception& e) {
                  throw Error(ErrorCode::BadConfig, std::string("query body is not JSON: ") + e.what(), "http");
                }
                if (!body.is_object() || !body.contains("query") || !body["query"].is_string())
                  throw Error(ErrorCode::BadConfig, "query body needs a \"query\" string", "http");
                const auto cfg = apply_overrides(config.recall, body.value("config", json()));
                res.set_content(run_query(*session, body["query"].get<std::string>(), cfg, backends),
                                "application/json");
              }));

    http.Get(R"(/sessions/([^/]+)/audio)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               const auto session = store.open(req.matches[1]);
               if (!req.has_param("direction"))
                 throw Error(ErrorCode::BadConfig, "missing query parameter direction", "http");
               const auto wav = session->audio_slice(req.get_param_value("direction"),
                                                     number_param(req, "start"), number_param(req, "end"));
               res.set_content(std::string(wav.begin(), wav.end()), "audio/wav");
             }));

    http.Get(R"(/sessions/([^/]+)/beampattern)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               const auto session = store.open(req.matches[1]);
               const double res_deg = req.has_param("resolution") ? number_param(req, "resolution") : 1.0;
               res.set_content(session->beampattern_csv(req.get_param_value("direction"),
                                                        number_param(req, "freq"), res_deg),
                               "text/csv");
             }));

    http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty() && res.status == 404)
        send_error(res, 404, error_json("http", "NotFound", "no such endpoint"));
    });
  }
};

ApiServer::ApiServer(ServiceConfig config) : ApiServer(config, make_backends(config)) {}

ApiServer::ApiServer(ServiceConfig config, Backends backends)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(backends))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind() {
  auto& i = *impl_;
  if (i.config.port == 0)
    i.port = i.http.bind_to_any_port(i.config.host);
  else
    i.port = i.http.bind_to_port(i.config.host, i.config.port) ? i.config.port : -1;
  if (i.port < 0)
    throw Error(ErrorCode::BindFailure,
                "cannot listen on " + i.config.host + ":" + std::to_string(i.config.port), "serve");
  return i.port;
}

void ApiServer::serve() { impl_->http.listen_after_bind(); }

void ApiServer::stop() {
  auto& i = *impl_;
  i.http.stop();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(i.jobs_mutex);
    workers.swap(i.workers);
  }
  for (auto& t : workers)
    if (t.joinable()) t.join();
}

int ApiServer::port() const { return impl_->port; }

SessionStore& ApiServer::store() { return impl_->store; }

void serve_until_signal(ApiServer& server) {
  if (server.port() <= 0) server.bind();
  g_signalled = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    while (!done && !g_signalled) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  });
  server.serve();
  done = true;
  watcher.join();
  std::signal(SIGINT, SIG_DFL);
  std::signal(SIGTERM, SIG_DFL);
}

}  // namespace beamrecall::service
