// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <json.hpp>
#include <set>

#include "beamrecall/error.hpp"
#include "beamrecall/recall.hpp"

namespace beamrecall::recall {
namespace {

using nlohmann::json;

template <typename F>
auto staged(const char* stage, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
}

json snippet_json(const Snippet& s) {
  return {{"direction_label", s.direction_label}, {"azimuth_deg", s.azimuth_deg},
          {"start_s", s.start_s},                 {"end_s", s.end_s},
          {"text", s.text},                       {"chunk_ids", s.chunk_ids}};
}

}  // namespace

void validate(const RecallConfig& config) {
  if (config.top_k < 1) throw Error(ErrorCode::BadConfig, "top_k must be at least 1");
  if (config.window_k < 0) throw Error(ErrorCode::BadConfig, "window_k must be non-negative");
  if (!(config.min_overlap_s > 0.0))
    throw Error(ErrorCode::BadConfig, "min_overlap_s must be positive");
}

std::string to_json(const RecallResult& result) {
  json missed = json::object();
  for (const auto& [label, snippets] : result.missed) {
    json arr = json::array();
    for (const auto& s : snippets) arr.push_back(snippet_json(s));
    missed[label] = std::move(arr);
  }
  json attended = json::array();
  for (const auto& s : result.attended) attended.push_back(snippet_json(s));
  json refs = json::array();
  for (const auto& r : result.playback_refs)
    refs.push_back({{"direction_label", r.direction_label}, {"start_s", r.start_s}, {"end_s", r.end_s}});
  const json doc{{"query", result.query},
                 {"topic", result.topic},
                 {"attended_direction", result.attended_direction},
                 {"attended", std::move(attended)},
                 {"missed", std::move(missed)},
                 {"summary", result.summary},
                 {"playback_refs", std::move(refs)}};
  return doc.dump(2);
}

std::vector<ScoredChunk> retrieve_attended(const std::string& topic,
                                           const index::IndexSnapshot& snapshot,
                                           index::EmbeddingProvider& provider,
                                           const RecallConfig& config) {
  validate(config);
  if (snapshot.index.size() == 0) throw Error(ErrorCode::EmptyIndex, "session has no indexed chunks");
  const auto hits = snapshot.index.search(provider.embed(topic), std::size_t(config.top_k));
  const auto& direction = snapshot.store.get(hits.front().chunk_id).direction_label;
  std::vector<ScoredChunk> out;
  for (const auto& h : hits) {
    const auto& c = snapshot.store.get(h.chunk_id);
    if (c.direction_label == direction) out.push_back({c, h.score});
  }
  return out;
}

std::vector<ScoredChunk> filter_relevant(const std::string& topic,
                                         const std::vector<ScoredChunk>& candidates,
                                         LlmBackend& llm, const RecallConfig& config) {
  std::vector<ScoredChunk> out;
  for (const auto& c : candidates) {
    const bool keep = config.relevance_mode == RelevanceMode::Threshold
                          ? c.score >= config.relevance_threshold
                          : llm.is_relevant(topic, c.chunk.text);
    if (keep) out.push_back(c);
  }
  return out;
}

Snippet snippet_from_positions(const index::MetadataStore& store, const std::string& label,
                               std::size_t first, std::size_t last) {
  Snippet s;
  s.direction_label = label;
  for (const auto& c : store.stream(label)) {
    if (c.stream_position < first || c.stream_position > last) continue;
    if (s.chunk_ids.empty()) {
      s.azimuth_deg = c.azimuth_deg;
      s.start_s = c.start_s;
      s.end_s = c.end_s;
      s.first_position = c.stream_position;
    }
    s.start_s = std::min(s.start_s, c.start_s);
    s.end_s = std::max(s.end_s, c.end_s);
    s.last_position = c.stream_position;
    s.text += (s.text.empty() ? "" : " ") + c.text;
    s.chunk_ids.push_back(c.chunk_id);
  }
  if (s.chunk_ids.empty())
    throw Error(ErrorCode::UnknownChunk, "stream " + label + " has no chunks in the requested range");
  return s;
}

Snippet expand_window(const Chunk& centroid, const index::MetadataStore& store, int window_k) {
  const auto& stored = store.get(centroid.chunk_id);
  const std::size_t k = std::size_t(std::max(window_k, 0));
  const std::size_t p = stored.stream_position;
  return snippet_from_positions(store, stored.direction_label, p >= k ? p - k : 0, p + k);
}

std::vector<Snippet> merge_snippets(const std::vector<Snippet>& snippets,
                                    const index::MetadataStore& store) {
  if (snippets.empty()) return {};
  const auto& label = snippets.front().direction_label;
  for (const auto& s : snippets)
    if (s.direction_label != label)
      throw Error(ErrorCode::MixedStreams, "cannot merge snippets from " + label + " and " +
                                               s.direction_label);
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (const auto& s : snippets) ranges.emplace_back(s.first_position, s.last_position);
  std::sort(ranges.begin(), ranges.end());
  std::vector<std::pair<std::size_t, std::size_t>> merged{ranges.front()};
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].first <= merged.back().second + 1)
      merged.back().second = std::max(merged.back().second, ranges[i].second);
    else
      merged.push_back(ranges[i]);
  }
  std::vector<Snippet> out;
  for (const auto& [a, b] : merged) out.push_back(snippet_from_positions(store, label, a, b));
  std::stable_sort(out.begin(), out.end(),
                   [](const Snippet& x, const Snippet& y) { return x.start_s < y.start_s; });
  return out;
}

double overlap_s(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

std::map<std::string, std::vector<Snippet>> find_missed(const std::vector<Snippet>& attended,
                                                        const index::MetadataStore& store,
                                                        const RecallConfig& config) {
  std::map<std::string, std::vector<Snippet>> out;
  if (attended.empty()) return out;
  std::set<std::string> labels;
  for (const auto& c : store.all()) labels.insert(c.direction_label);
  labels.erase(attended.front().direction_label);

  for (const auto& label : labels) {
    std::vector<Snippet> groups;
    const Chunk* prev = nullptr;
    for (const auto& c : store.stream(label)) {
      const bool hit = std::any_of(attended.begin(), attended.end(), [&](const Snippet& a) {
        return overlap_s(a.start_s, a.end_s, c.start_s, c.end_s) >= config.min_overlap_s;
      });
      if (!hit) {
        prev = nullptr;
        continue;
      }
      if (prev && c.stream_position == prev->stream_position + 1) {
        groups.back() = snippet_from_positions(store, label, groups.back().first_position,
                                               c.stream_position);
      } else {
        groups.push_back(snippet_from_positions(store, label, c.stream_position, c.stream_position));
      }
      prev = &store.get(c.chunk_id);
    }
    if (!groups.empty()) out[label] = std::move(groups);
  }
  return out;
}

RecallResult answer_query(const index::IndexSnapshot& snapshot, const std::string& query,
                          const RecallConfig& config, LlmBackend& llm,
                          index::EmbeddingProvider& provider) {
  staged("validate", [&] {
    validate(config);
    return 0;
  });
  RecallResult result;
  result.query = query;
  result.topic = staged("extract_topic", [&] {
    if (query.find_first_not_of(" \t\r\n") == std::string::npos)
      throw Error(ErrorCode::NoTopic, "query is empty");
    return llm.extract_topic(query);
  });
  const auto candidates = staged("retrieve_attended", [&] {
    return retrieve_attended(result.topic, snapshot, provider, config);
  });
  const auto relevant = staged("filter_relevant", [&] {
    auto kept = filter_relevant(result.topic, candidates, llm, config);
    if (kept.empty())
      throw Error(ErrorCode::EmptyAttended,
                  "no retrieved chunk was relevant to topic \"" + result.topic + "\"");
    return kept;
  });
  result.attended_direction = relevant.front().chunk.direction_label;
  result.attended = staged("expand_window", [&] {
    std::vector<Snippet> windows;
    for (const auto& r : relevant) windows.push_back(expand_window(r.chunk, snapshot.store, config.window_k));
    return merge_snippets(windows, snapshot.store);
  });
  result.missed = staged("find_missed", [&] { return find_missed(result.attended, snapshot.store, config); });
  result.summary = staged("summarize", [&] {
    return llm.summarize(result.topic, result.attended, result.missed);
  });
  for (const auto& s : result.attended) result.playback_refs.push_back({s.direction_label, s.start_s, s.end_s});
  for (const auto& [label, snippets] : result.missed)
    for (const auto& s : snippets) result.playback_refs.push_back({label, s.start_s, s.end_s});
  return result;
}

index::IndexSnapshot build_index(const std::vector<StreamTranscript>& streams,
                                 index::EmbeddingProvider& provider, std::size_t max_sentences) {
  index::IndexSnapshot snap{index::VectorIndex(provider.dim()), {}};
  std::vector<std::uint64_t> ids;
  std::vector<index::EmbeddingVector> vectors;
  std::set<std::string> seen;
  for (const auto& stream : streams) {
    if (!seen.insert(stream.direction_label).second)
      throw Error(ErrorCode::DuplicateLabel, "direction " + stream.direction_label + " listed twice");
    for (auto c : transcribe::chunk_segments(transcribe::sort_segments(stream.segments), max_sentences)) {
      c.chunk_id = ids.size();
      c.direction_label = stream.direction_label;
      c.azimuth_deg = stream.azimuth_deg;
      vectors.push_back(provider.embed(c.text));
      ids.push_back(c.chunk_id);
      snap.store.add(std::move(c));
    }
  }
  snap.index.add(ids, vectors);
  return snap;
}

}  // namespace beamrecall::recall
