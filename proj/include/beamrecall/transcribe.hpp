// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "beamrecall/audio.hpp"
#include "beamrecall/http_client.hpp"

namespace beamrecall::transcribe {

struct TranscriptSegment {
  std::string text;
  double start_s = 0.0;
  double end_s = 0.0;
};

/// A ~3-sentence transcript unit with what/where/when metadata.
struct Chunk {
  std::uint64_t chunk_id = 0;
  std::string text;
  std::string direction_label;
  double azimuth_deg = 0.0;
  double start_s = 0.0;
  double end_s = 0.0;
  std::size_t stream_position = 0;
};

/// Audio handed to an ASR backend: one beamformed stream.
struct StreamAudio {
  std::string label;
  std::span<const double> samples;
  int sample_rate_hz = 16000;
};

class AsrBackend {
 public:
  virtual ~AsrBackend() = default;
  /// Segments sorted by start time.
  virtual std::vector<TranscriptSegment> transcribe(const StreamAudio& stream) = 0;
  virtual std::string kind() const = 0;
};

/// Reads `<directory>/<label>.json`, a JSON array of {text, start, end}.
class FixtureAsrBackend final : public AsrBackend {
 public:
  explicit FixtureAsrBackend(std::filesystem::path directory);
  std::vector<TranscriptSegment> transcribe(const StreamAudio& stream) override;
  std::string kind() const override { return "fixture-file"; }

 private:
  std::filesystem::path directory_;
};

struct RemoteAsrConfig {
  net::Endpoint endpoint;
  std::string model = "whisper-1";
  net::RetryPolicy retry;
  std::ptrdiff_t max_in_flight = 2;
};

/// Uploads the stream as 16-bit WAV in a multipart form (file, model,
/// response_format=verbose_json) and reads the "segments" array of the reply.
/// At most max_in_flight requests run at once across threads.
class RemoteAsrBackend final : public AsrBackend {
 public:
  explicit RemoteAsrBackend(RemoteAsrConfig config);
  std::vector<TranscriptSegment> transcribe(const StreamAudio& stream) override;
  std::string kind() const override { return "remote-http"; }

 private:
  RemoteAsrConfig config_;
  std::counting_semaphore<64> in_flight_;
};

/// Parses a JSON segments payload: either a bare array or an object with a
/// "segments" array. Entries need text/start/end; blank texts are dropped.
/// Throws Error(MalformedResponse).
std::vector<TranscriptSegment> parse_segments(const std::string& json_text);

std::vector<TranscriptSegment> sort_segments(std::vector<TranscriptSegment> segments);

/// Sentence with its [begin, end) byte offsets in the source text.
struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Splits after '.', '!' or '?' (runs of them, plus closing quotes or
/// brackets) when followed by whitespace or the end of text. "Dr.", "Mr.",
/// "Mrs.", "Ms.", "e.g.", "i.e." and "etc." never end a sentence. A trailing
/// fragment without terminal punctuation is its own sentence.
std::vector<SentenceSpan> sentence_spans(std::string_view text);
std::vector<std::string> split_sentences(std::string_view text);

/// Greedy grouping of the segments' sentences into chunks of max_sentences
/// (the last may be shorter). Chunk text joins its sentences with single
/// spaces. A chunk's interval runs from its first sentence's start to its
/// last sentence's end; sentence times come from linear interpolation of
/// character position within the segment holding it, so a chunk built from
/// whole segments spans exactly those segments. chunk_id and stream_position
/// are both the chunk's index; direction fields are left empty.
std::vector<Chunk> chunk_segments(std::span<const TranscriptSegment> segments,
                                  std::size_t max_sentences = 3);

/// Collapses whitespace runs to single spaces and trims.
std::string normalize_whitespace(std::string_view text);

}  // namespace beamrecall::transcribe
