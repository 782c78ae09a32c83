// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "beamrecall/error.hpp"
#include "beamrecall/semantic_index.hpp"

namespace beamrecall::index {

EmbeddingVector EmbeddingVector::normalized(std::span<const double> values) {
  double norm = 0.0;
  for (double v : values) norm += v * v;
  norm = std::sqrt(norm);
  if (values.empty() || !(norm > 0.0) || !std::isfinite(norm))
    throw Error(ErrorCode::EmptyTensor, "embedding must be a finite non-zero vector");
  EmbeddingVector out;
  out.values_.reserve(values.size());
  for (double v : values) out.values_.push_back(float(v / norm));
  return out;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "cosine of unequal dims");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += double(a.values()[i]) * double(b.values()[i]);
  return dot;
}

std::uint64_t fnv1a_64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(char(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

EmbeddingVector hash_embed(std::string_view text, std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::BadConfig, "embedding dim must be positive");
  auto tokens = tokenize(text);
  // Immediate repeats ("dogs dogs") are stutters, not extra content.
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  if (tokens.empty()) throw Error(ErrorCode::NoTokens, "text has no tokens to embed");
  std::vector<double> acc(dim, 0.0);
  auto feature = [&](const std::string& key) {
    const std::uint64_t h = fnv1a_64(key);
    acc[h % dim] += (h >> 63) ? -1.0 : 1.0;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    feature("u:" + tokens[i]);
    if (i + 1 < tokens.size()) feature("b:" + tokens[i] + " " + tokens[i + 1]);
  }
  // Features that cancel exactly leave a zero vector; fall back to a single
  // bucket so the text still embeds deterministically.
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  if (norm == 0.0) acc[fnv1a_64(text) % dim] = 1.0;
  return EmbeddingVector::normalized(acc);
}

EmbeddingVector parse_embedding_response(const std::string& body, std::size_t expected_dim) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("embedding reply is not JSON: ") + e.what());
  }
  const json* vec = nullptr;
  if (doc.is_object()) {
    if (doc.contains("data") && doc["data"].is_array() && !doc["data"].empty() &&
        doc["data"][0].is_object() && doc["data"][0].contains("embedding"))
      vec = &doc["data"][0]["embedding"];
    else if (doc.contains("embedding"))
      vec = &doc["embedding"];
    else if (doc.contains("embeddings") && doc["embeddings"].is_array() && !doc["embeddings"].empty())
      vec = &doc["embeddings"][0];
  }
  if (!vec || !vec->is_array())
    throw Error(ErrorCode::MalformedResponse, "embedding reply has no vector array");
  std::vector<double> values;
  for (const auto& v : *vec) {
    if (!v.is_number()) throw Error(ErrorCode::MalformedResponse, "embedding has non-numeric entry");
    values.push_back(v.get<double>());
  }
  if (values.size() != expected_dim)
    throw Error(ErrorCode::DimensionMismatch, "provider returned dim " + std::to_string(values.size()) +
                                                  ", expected " + std::to_string(expected_dim));
  try {
    return EmbeddingVector::normalized(values);
  } catch (const Error&) {
    throw Error(ErrorCode::MalformedResponse, "provider returned a zero vector");
  }
}

EmbeddingVector RemoteEmbeddingProvider::embed(const std::string& text) {
  if (tokenize(text).empty()) throw Error(ErrorCode::NoTokens, "text has no tokens to embed");
  const nlohmann::json req{{"model", config_.model}, {"input", {text}}};
  std::string body;
  try {
    body = net::post_json(config_.endpoint, req.dump(), config_.retry);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BackendUnreachable) throw;
    throw Error(ErrorCode::ProviderUnreachable, e.what());
  }
  return parse_embedding_response(body, config_.dim);
}

}  // namespace beamrecall::index
