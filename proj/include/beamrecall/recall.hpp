// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "beamrecall/http_client.hpp"
#include "beamrecall/semantic_index.hpp"
#include "beamrecall/transcribe.hpp"

namespace beamrecall::recall {

using transcribe::Chunk;

enum class RelevanceMode { Llm, Threshold };

struct RecallConfig {
  int top_k = 10;
  int window_k = 2;
  double min_overlap_s = 0.5;
  RelevanceMode relevance_mode = RelevanceMode::Llm;
  double relevance_threshold = 0.35;
};

/// Throws Error(BadConfig) unless top_k >= 1, window_k >= 0, min_overlap_s > 0.
void validate(const RecallConfig& config);

/// Contiguous run of one stream's chunks.
struct Snippet {
  std::string direction_label;
  double azimuth_deg = 0.0;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;
  std::vector<std::uint64_t> chunk_ids;
  std::size_t first_position = 0;
  std::size_t last_position = 0;
};

struct PlaybackRef {
  std::string direction_label;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct RecallResult {
  std::string query;
  std::string topic;
  std::string attended_direction;
  std::vector<Snippet> attended;
  std::map<std::string, std::vector<Snippet>> missed;
  std::string summary;
  std::vector<PlaybackRef> playback_refs;
};

/// Pretty-printed JSON with sorted keys; the one serialization used by the
/// CLI and the HTTP API.
std::string to_json(const RecallResult& result);

struct ScoredChunk {
  Chunk chunk;
  double score = 0.0;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  /// Throws Error(NoTopic).
  virtual std::string extract_topic(const std::string& query) = 0;
  virtual bool is_relevant(const std::string& topic, const std::string& chunk_text) = 0;
  virtual std::string summarize(const std::string& topic, const std::vector<Snippet>& attended,
                                const std::map<std::string, std::vector<Snippet>>& missed) = 0;
  virtual std::string kind() const = 0;
};

/// Rule-based offline backend.
///  - topic: text after the last of "about", "on", "regarding", "concerning",
///    "during", "following", "listening to", up to punctuation, without
///    leading articles or a trailing "conversation"/"talk"/"discussion"-like
///    noun.
///  - relevance: the chunk shares a non-stopword token with the topic.
///  - summary: one templated bullet per missed snippet.
class StubLlm final : public LlmBackend {
 public:
  std::string extract_topic(const std::string& query) override;
  bool is_relevant(const std::string& topic, const std::string& chunk_text) override;
  std::string summarize(const std::string& topic, const std::vector<Snippet>& attended,
                        const std::map<std::string, std::vector<Snippet>>& missed) override;
  std::string kind() const override { return "deterministic-stub"; }
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatConfig {
  net::Endpoint endpoint;
  std::string model = "gpt-4o-mini";
  net::RetryPolicy retry;
};

/// One chat-completion round trip (temperature 0); returns
/// choices[0].message.content. Throws Error(BackendUnreachable) or
/// Error(MalformedResponse).
std::string chat_complete(const ChatConfig& config, const std::vector<ChatMessage>& messages);

class RemoteChatLlm final : public LlmBackend {
 public:
  explicit RemoteChatLlm(ChatConfig config) : config_(std::move(config)) {}
  /// Answer trimmed of quotes and punctuation, cut to 8 words.
  std::string extract_topic(const std::string& query) override;
  /// True when the reply starts with "yes".
  bool is_relevant(const std::string& topic, const std::string& chunk_text) override;
  std::string summarize(const std::string& topic, const std::vector<Snippet>& attended,
                        const std::map<std::string, std::vector<Snippet>>& missed) override;
  std::string kind() const override { return "remote-chat"; }

 private:
  ChatConfig config_;
};

/// Embeds the topic, takes the top_k hits over all streams, and keeps those
/// from the direction of the best hit. Throws Error(EmptyIndex).
std::vector<ScoredChunk> retrieve_attended(const std::string& topic,
                                           const index::IndexSnapshot& snapshot,
                                           index::EmbeddingProvider& provider,
                                           const RecallConfig& config);

/// Order-preserving subset; may be empty.
std::vector<ScoredChunk> filter_relevant(const std::string& topic,
                                         const std::vector<ScoredChunk>& candidates,
                                         LlmBackend& llm, const RecallConfig& config);

/// Centroid plus up to K neighbours each side in its stream.
/// Throws Error(UnknownChunk).
Snippet expand_window(const Chunk& centroid, const index::MetadataStore& store, int window_k);

/// Builds the snippet covering stream positions [first, last] of `label`.
Snippet snippet_from_positions(const index::MetadataStore& store, const std::string& label,
                               std::size_t first, std::size_t last);

/// Unions overlapping or touching position ranges of one stream, sorted by
/// start. Throws Error(MixedStreams).
std::vector<Snippet> merge_snippets(const std::vector<Snippet>& snippets,
                                    const index::MetadataStore& store);

/// Seconds of overlap between [a0, a1] and [b0, b1] (0 when disjoint).
double overlap_s(double a0, double a1, double b0, double b1);

/// Chunks of every other stream overlapping some attended snippet by at
/// least min_overlap_s, grouped into snippets of adjacent stream positions.
std::map<std::string, std::vector<Snippet>> find_missed(const std::vector<Snippet>& attended,
                                                        const index::MetadataStore& store,
                                                        const RecallConfig& config);

/// Runs the full query pipeline. Errors carry the failing stage name:
/// extract_topic, retrieve_attended, filter_relevant, expand_window,
/// find_missed or summarize.
RecallResult answer_query(const index::IndexSnapshot& snapshot, const std::string& query,
                          const RecallConfig& config, LlmBackend& llm,
                          index::EmbeddingProvider& provider);

/// Transcript of one direction ready to be chunked and indexed.
struct StreamTranscript {
  std::string direction_label;
  double azimuth_deg = 0.0;
  std::vector<transcribe::TranscriptSegment> segments;
};

/// Chunks each stream (in the given order), assigns session-wide chunk ids in
/// that order, embeds every chunk and returns the populated index and store.
index::IndexSnapshot build_index(const std::vector<StreamTranscript>& streams,
                                 index::EmbeddingProvider& provider,
                                 std::size_t max_sentences = 3);

}  // namespace beamrecall::recall
