// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "beamrecall/error.hpp"
#include "beamrecall/transcribe.hpp"

namespace beamrecall::transcribe {

using nlohmann::json;

std::vector<TranscriptSegment> parse_segments(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("segments are not JSON: ") + e.what());
  }
  const json* list = &doc;
  if (doc.is_object()) {
    if (!doc.contains("segments"))
      throw Error(ErrorCode::MalformedResponse, "response has no segments array");
    list = &doc["segments"];
  }
  if (!list->is_array()) throw Error(ErrorCode::MalformedResponse, "segments is not an array");

  std::vector<TranscriptSegment> out;
  for (const auto& item : *list) {
    if (!item.is_object() || !item.contains("text") || !item.contains("start") ||
        !item.contains("end") || !item["text"].is_string() || !item["start"].is_number() ||
        !item["end"].is_number())
      throw Error(ErrorCode::MalformedResponse, "segment needs string text and numeric start/end");
    TranscriptSegment seg{item["text"].get<std::string>(), item["start"].get<double>(),
                          item["end"].get<double>()};
    if (normalize_whitespace(seg.text).empty()) continue;
    if (!std::isfinite(seg.start_s) || !std::isfinite(seg.end_s) || !(seg.start_s < seg.end_s))
      throw Error(ErrorCode::MalformedResponse, "segment must have start < end");
    out.push_back(std::move(seg));
  }
  return out;
}

FixtureAsrBackend::FixtureAsrBackend(std::filesystem::path directory)
    : directory_(std::move(directory)) {}

std::vector<TranscriptSegment> FixtureAsrBackend::transcribe(const StreamAudio& stream) {
  const auto path = directory_ / (stream.label + ".json");
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FixtureMissing, "no transcript fixture at " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return sort_segments(parse_segments(buf.str()));
}

RemoteAsrBackend::RemoteAsrBackend(RemoteAsrConfig config)
    : config_(std::move(config)),
      in_flight_(std::clamp<std::ptrdiff_t>(config_.max_in_flight, 1, 64)) {}

std::vector<TranscriptSegment> RemoteAsrBackend::transcribe(const StreamAudio& stream) {
  const auto wav = audio::encode_wav(
      audio::MultichannelAudio::mono({stream.samples.begin(), stream.samples.end()},
                                     stream.sample_rate_hz),
      audio::WavEncoding::Pcm16);
  const std::vector<net::MultipartField> fields{
      {"file", std::string(wav.begin(), wav.end()), stream.label + ".wav", "audio/wav"},
      {"model", config_.model, "", ""},
      {"response_format", "verbose_json", "", ""},
      {"timestamp_granularities[]", "segment", "", ""},
  };
  std::string body;
  in_flight_.acquire();
  try {
    body = net::post_multipart(config_.endpoint, fields, config_.retry);
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();
  return sort_segments(parse_segments(body));
}

}  // namespace beamrecall::transcribe
