// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "beamrecall/array_dsp.hpp"
#include "beamrecall/audio.hpp"
#include "beamrecall/error.hpp"
#include "beamrecall/recall.hpp"
#include "beamrecall/semantic_index.hpp"
#include "beamrecall/transcribe.hpp"

namespace beamrecall::service {

enum class AsrKind { Fixture, Remote };
enum class EmbeddingKind { Local, Remote };
enum class LlmKind { Stub, Remote };

struct RemoteSettings {
  std::string url;
  std::string token;
  std::string model;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path sessions_root = "sessions";
  std::filesystem::path static_dir;  // UI assets served at /, empty to disable
  std::string api_token;             // required as a bearer token when set

  AsrKind asr_kind = AsrKind::Fixture;
  std::filesystem::path asr_fixture_dir = "transcripts";
  RemoteSettings asr{"", "", "whisper-1"};
  int asr_max_in_flight = 2;

  EmbeddingKind embedding_kind = EmbeddingKind::Local;
  std::size_t embedding_dim = index::kDefaultDim;
  RemoteSettings embedding{"", "", "all-MiniLM-L6-v2"};

  LlmKind llm_kind = LlmKind::Stub;
  RemoteSettings llm{"", "", "gpt-4o-mini"};

  net::RetryPolicy retry;
  recall::RecallConfig recall;
  array::SeparationConfig separation;
  std::size_t max_sentences = 3;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

/// INI-style text: top-level keys plus [server], [asr], [embedding], [llm],
/// [recall], [retry] and [ingest] sections. Tokens may be overridden by
/// BEAMRECALL_API_TOKEN, BEAMRECALL_ASR_TOKEN, BEAMRECALL_EMBEDDING_TOKEN and
/// BEAMRECALL_LLM_TOKEN. Throws Error(BadConfig).
ServiceConfig parse_config(const std::string& text, const EnvLookup& env = process_env);
ServiceConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env);

/// Throws Error(BadConfig) on out-of-range values or a remote backend
/// without a URL.
void validate(const ServiceConfig& config);

struct Backends {
  std::shared_ptr<transcribe::AsrBackend> asr;
  std::shared_ptr<index::EmbeddingProvider> embedder;
  std::shared_ptr<recall::LlmBackend> llm;
};

Backends make_backends(const ServiceConfig& config);

/// Applies {"top_k", "window_k", "min_overlap_s", "relevance_mode",
/// "relevance_threshold"} overrides. Throws Error(BadConfig).
recall::RecallConfig apply_overrides(recall::RecallConfig base, const nlohmann::json& overrides);

struct StreamRecord {
  std::string label;
  double azimuth_deg = 0.0;
  std::string wav;         // relative to the session directory
  std::string transcript;  // relative to the session directory
};

struct SessionManifest {
  std::string session_id;
  std::string created_at;  // ISO-8601 UTC
  int sample_rate_hz = 0;
  std::string geometry;
  double duration_s = 0.0;
  std::vector<StreamRecord> streams;
  std::size_t chunk_count = 0;
  nlohmann::json config;
};

nlohmann::json manifest_to_json(const SessionManifest& manifest);
/// Throws Error(CorruptFile), including for paths leaving the session.
SessionManifest manifest_from_json(const nlohmann::json& doc);

/// Either fixed directions or auto-DOA with up to max_sources peaks.
struct IngestPlan {
  std::vector<array::StreamDirection> directions;
  bool auto_doa = false;
  int max_sources = 2;
  std::string geometry = "uma8";
};

/// Accepts {"directions": [{"label", "azimuth_deg"}]} or
/// {"directions": {"left": 135}}, or {"auto_doa": true, "max_sources": 2};
/// "geometry" is optional. Throws Error(BadConfig).
IngestPlan plan_from_json(const std::string& text);
nlohmann::json plan_to_json(const IngestPlan& plan);

/// Parses "label:azimuth".
array::StreamDirection parse_direction(const std::string& spec);

/// A committed session, loaded read-only.
class Session {
 public:
  Session(std::filesystem::path dir, SessionManifest manifest, index::IndexSnapshot index,
          std::map<std::string, array::BeamformerWeights> beamformers);

  const SessionManifest& manifest() const { return manifest_; }
  const std::filesystem::path& dir() const { return dir_; }
  const index::IndexSnapshot& index() const { return index_; }
  const StreamRecord& stream(const std::string& label) const;  // Error(UnknownDirection)

  /// Mono stream audio, read on first use.
  std::shared_ptr<const audio::MultichannelAudio> stream_audio(const std::string& label) const;
  /// 16-bit WAV of [start_s, end_s) of one stream.
  std::vector<std::uint8_t> audio_slice(const std::string& label, double start_s, double end_s) const;
  /// CSV beam pattern of a stream's beamformer (first stream when empty).
  std::string beampattern_csv(const std::string& label, double freq_hz,
                              double resolution_deg = 1.0) const;

 private:
  std::filesystem::path dir_;
  SessionManifest manifest_;
  index::IndexSnapshot index_;
  std::map<std::string, array::BeamformerWeights> beamformers_;
  mutable std::mutex audio_mutex_;
  mutable std::map<std::string, std::shared_ptr<const audio::MultichannelAudio>> audio_;
};

struct IngestOptions {
  array::SeparationConfig separation;
  std::size_t max_sentences = 3;
};

/// Sessions under one root directory: <root>/<id>/ holding manifest.json,
/// streams/<label>.wav, transcripts/<label>.json, chunks.json, index.bflm
/// and beamformers.json. A session becomes visible when its directory is
/// renamed into place with the manifest already written.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::vector<SessionManifest> list() const;
  bool exists(const std::string& id) const;
  /// Throws Error(UnknownSession).
  std::shared_ptr<const Session> open(const std::string& id) const;

  /// First 12 hex chars of SHA-256 over the WAV bytes and the canonical
  /// ingest configuration.
  static std::string session_id(std::span<const std::uint8_t> wav_bytes, const IngestPlan& plan,
                                const IngestOptions& options, const Backends& backends);

  /// Runs DOA (when planned), MVDR separation, ASR, chunking and indexing,
  /// then commits the session. Returns the existing id when already present.
  /// Errors carry the stage: decode, doa, beamform, transcribe, index or
  /// persist. Throws Error(ChannelMismatch) when the WAV does not match the
  /// geometry.
  std::string ingest(std::span<const std::uint8_t> wav_bytes, const IngestPlan& plan,
                     const IngestOptions& options, const Backends& backends);

 private:
  std::filesystem::path root_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<const Session>> cache_;
  std::map<std::string, std::shared_ptr<std::mutex>> ingest_locks_;
};

/// Serialized RecallResult plus a trailing newline; shared by the CLI and
/// the HTTP API so both emit identical bytes.
std::string run_query(const Session& session, const std::string& query,
                      const recall::RecallConfig& config, const Backends& backends);

/// 4xx for caller mistakes, 5xx for backend and internal failures.
int http_status(ErrorCode code);
bool is_user_error(ErrorCode code);
/// {"stage", "code", "message"}.
std::string error_json(const std::string& stage, const std::string& code,
                       const std::string& message);
std::string error_json(const Error& error);

/// HTTP front end over a SessionStore.
class ApiServer {
 public:
  explicit ApiServer(ServiceConfig config);
  ApiServer(ServiceConfig config, Backends backends);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds host:port (port 0 picks one) and returns the bound port.
  /// Throws Error(BindFailure).
  int bind();
  /// Serves until stop(); requires bind().
  void serve();
  /// Stops accepting, lets in-flight requests finish and joins ingest jobs.
  void stop();
  int port() const;
  SessionStore& store();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// bind + serve until SIGINT or SIGTERM, then a graceful stop.
void serve_until_signal(ApiServer& server);

}  // namespace beamrecall::service
