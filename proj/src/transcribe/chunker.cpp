// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "beamrecall/transcribe.hpp"

namespace beamrecall::transcribe {

std::vector<TranscriptSegment> sort_segments(std::vector<TranscriptSegment> segments) {
  std::stable_sort(segments.begin(), segments.end(),
                   [](const TranscriptSegment& a, const TranscriptSegment& b) {
                     return a.start_s < b.start_s;
                   });
  return segments;
}

std::vector<Chunk> chunk_segments(std::span<const TranscriptSegment> segments,
                                  std::size_t max_sentences) {
  if (max_sentences == 0) max_sentences = 1;

  // Join normalized segment texts with single spaces, remembering where each
  // segment landed.
  struct Placed {
    std::size_t begin, end;
    double start_s, end_s;
  };
  std::string joined;
  std::vector<Placed> placed;
  for (const auto& seg : segments) {
    const auto text = normalize_whitespace(seg.text);
    if (text.empty()) continue;
    if (!joined.empty()) joined.push_back(' ');
    placed.push_back({joined.size(), joined.size() + text.size(), seg.start_s, seg.end_s});
    joined += text;
  }
  if (placed.empty()) return {};

  // Time at character offset `pos`; `closing` picks the segment a position on
  // a boundary ends rather than the one it starts.
  auto time_at = [&](std::size_t pos, bool closing) {
    auto it = std::find_if(placed.begin(), placed.end(), [&](const Placed& p) {
      return closing ? (pos > p.begin && pos <= p.end) : (pos >= p.begin && pos < p.end);
    });
    if (it == placed.end()) it = closing ? placed.end() - 1 : placed.begin();
    if (pos <= it->begin) return it->start_s;
    if (pos >= it->end) return it->end_s;
    const double frac = double(pos - it->begin) / double(it->end - it->begin);
    return it->start_s + (it->end_s - it->start_s) * frac;
  };

  const auto spans = sentence_spans(joined);
  std::vector<Chunk> chunks;
  for (std::size_t i = 0; i < spans.size(); i += max_sentences) {
    const std::size_t last = std::min(spans.size(), i + max_sentences) - 1;
    Chunk c;
    c.chunk_id = chunks.size();
    c.stream_position = chunks.size();
    c.text = joined.substr(spans[i].begin, spans[last].end - spans[i].begin);
    c.start_s = time_at(spans[i].begin, false);
    c.end_s = time_at(spans[last].end, true);
    chunks.push_back(std::move(c));
  }
  return chunks;
}

}  // namespace beamrecall::transcribe
