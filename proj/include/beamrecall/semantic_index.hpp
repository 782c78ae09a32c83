// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beamrecall/http_client.hpp"
#include "beamrecall/transcribe.hpp"

namespace beamrecall::index {

inline constexpr std::size_t kDefaultDim = 384;

/// Unit-norm float vector. Construction normalizes and rejects zero input.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  /// Throws Error(EmptyTensor) for an empty or all-zero input.
  static EmbeddingVector normalized(std::span<const double> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const float> values() const { return values_; }

 private:
  std::vector<float> values_;
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// 64-bit FNV-1a.
std::uint64_t fnv1a_64(std::string_view bytes);

/// Lowercased runs of ASCII alphanumerics (bytes >= 0x80 count as letters).
std::vector<std::string> tokenize(std::string_view text);

/// Signed feature hashing of unigrams and adjacent bigrams into `dim`
/// buckets, then L2 normalization. Immediately repeated tokens count once.
/// Throws Error(NoTokens).
EmbeddingVector hash_embed(std::string_view text, std::size_t dim = kDefaultDim);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EmbeddingVector embed(const std::string& text) = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string kind() const = 0;
};

class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dim = kDefaultDim) : dim_(dim) {}
  EmbeddingVector embed(const std::string& text) override { return hash_embed(text, dim_); }
  std::size_t dim() const override { return dim_; }
  std::string kind() const override { return "local-hash"; }

 private:
  std::size_t dim_;
};

struct RemoteEmbeddingConfig {
  net::Endpoint endpoint;
  std::string model = "all-MiniLM-L6-v2";
  std::size_t dim = kDefaultDim;
  net::RetryPolicy retry;
};

/// POSTs {"model", "input": [text]} and reads the vector from
/// data[0].embedding, embedding, or embeddings[0].
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config) : config_(std::move(config)) {}
  EmbeddingVector embed(const std::string& text) override;
  std::size_t dim() const override { return config_.dim; }
  std::string kind() const override { return "remote-http"; }

 private:
  RemoteEmbeddingConfig config_;
};

/// Extracts and normalizes the vector from an embeddings response body.
/// Throws Error(MalformedResponse) or Error(DimensionMismatch).
EmbeddingVector parse_embedding_response(const std::string& body, std::size_t expected_dim);

struct SearchHit {
  std::uint64_t chunk_id = 0;
  double score = 0.0;
};

/// Exact cosine index over unit-norm rows.
class VectorIndex {
 public:
  explicit VectorIndex(std::size_t dim = kDefaultDim);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::uint64_t>& ids() const { return ids_; }
  const std::vector<float>& matrix() const { return matrix_; }
  std::span<const float> row(std::size_t i) const;
  bool contains(std::uint64_t id) const;

  /// All-or-nothing. Throws Error(DuplicateId) for ids already present or
  /// repeated within the batch, Error(DimensionMismatch) on length/dim errors.
  void add(std::span<const std::uint64_t> ids, std::span<const EmbeddingVector> vectors);

  /// Top min(k, N) rows by cosine, descending; ties by ascending id.
  /// Throws Error(EmptyIndex) or Error(DimensionMismatch).
  std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k) const;

  /// Adds rows from raw storage; used by the file reader.
  static VectorIndex from_rows(std::size_t dim, std::vector<float> matrix,
                               std::vector<std::uint64_t> ids);

 private:
  std::size_t dim_;
  std::vector<float> matrix_;
  std::vector<std::uint64_t> ids_;
  std::map<std::uint64_t, std::size_t> position_;
};

/// chunk_id → Chunk.
class MetadataStore {
 public:
  void add(transcribe::Chunk chunk);  // Error(DuplicateId)
  const transcribe::Chunk& get(std::uint64_t id) const;  // Error(UnknownChunk)
  bool contains(std::uint64_t id) const { return chunks_.contains(id); }
  std::size_t size() const { return chunks_.size(); }
  /// Chunks in ascending id order.
  std::vector<transcribe::Chunk> all() const;
  /// Chunks of one direction in stream order.
  std::vector<transcribe::Chunk> stream(const std::string& direction_label) const;

 private:
  std::map<std::uint64_t, transcribe::Chunk> chunks_;
};

std::string chunks_to_json(std::span<const transcribe::Chunk> chunks);
std::vector<transcribe::Chunk> chunks_from_json(const std::string& text);  // Error(CorruptFile)

/// Binary index format: "BFLM", u32 version, u64 N, u32 D, N*D f32 rows,
/// N u64 ids, all little-endian.
std::vector<std::uint8_t> encode_index(const VectorIndex& index);
VectorIndex decode_index(std::span<const std::uint8_t> bytes);  // Error(CorruptFile)

inline constexpr const char* kIndexFile = "index.bflm";
inline constexpr const char* kChunksFile = "chunks.json";

/// Writes index.bflm and chunks.json under `directory`.
void save_index(const VectorIndex& index, const MetadataStore& store,
                const std::filesystem::path& directory);

struct LoadedIndex {
  VectorIndex index;
  MetadataStore store;
};

/// Reads both files back. Throws Error(CorruptFile) when they are unreadable
/// or their id sets differ, Error(IoFailure) when missing.
LoadedIndex load_index(const std::filesystem::path& directory);

/// Immutable view handed to readers.
struct IndexSnapshot {
  VectorIndex index;
  MetadataStore store;
};

/// Many readers, one writer. Readers hold a snapshot that never changes under
/// them; the writer publishes a new one by pointer swap.
class SharedIndex {
 public:
  explicit SharedIndex(std::size_t dim = kDefaultDim);
  explicit SharedIndex(IndexSnapshot initial);

  std::shared_ptr<const IndexSnapshot> snapshot() const;

  /// Adds chunks and their vectors on a copy, then publishes it.
  void ingest(std::span<const transcribe::Chunk> chunks,
              std::span<const EmbeddingVector> vectors);

 private:
  mutable std::mutex mutex_;
  std::mutex writer_;
  std::shared_ptr<const IndexSnapshot> current_;
};

}  // namespace beamrecall::index
