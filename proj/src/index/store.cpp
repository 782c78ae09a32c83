// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <set>

#include "beamrecall/error.hpp"
#include "beamrecall/semantic_index.hpp"

namespace beamrecall::index {
namespace {

using nlohmann::json;
using transcribe::Chunk;

constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 4;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(std::uint8_t(value >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= T(p[i]) << (8 * i);
  return v;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_atomically(const std::filesystem::path& path, const void* data, std::size_t size) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    out.write(static_cast<const char*>(data), std::streamsize(size));
    if (!out) throw Error(ErrorCode::IoFailure, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void MetadataStore::add(Chunk chunk) {
  const auto id = chunk.chunk_id;
  if (!chunks_.emplace(id, std::move(chunk)).second)
    throw Error(ErrorCode::DuplicateId, "chunk id " + std::to_string(id) + " already stored");
}

const Chunk& MetadataStore::get(std::uint64_t id) const {
  const auto it = chunks_.find(id);
  if (it == chunks_.end()) throw Error(ErrorCode::UnknownChunk, "no chunk with id " + std::to_string(id));
  return it->second;
}

std::vector<Chunk> MetadataStore::all() const {
  std::vector<Chunk> out;
  out.reserve(chunks_.size());
  for (const auto& [id, c] : chunks_) out.push_back(c);
  return out;
}

std::vector<Chunk> MetadataStore::stream(const std::string& direction_label) const {
  std::vector<Chunk> out;
  for (const auto& [id, c] : chunks_)
    if (c.direction_label == direction_label) out.push_back(c);
  std::stable_sort(out.begin(), out.end(), [](const Chunk& a, const Chunk& b) {
    return a.stream_position < b.stream_position;
  });
  return out;
}

std::string chunks_to_json(std::span<const Chunk> chunks) {
  json arr = json::array();
  for (const auto& c : chunks)
    arr.push_back({{"chunk_id", c.chunk_id},
                   {"text", c.text},
                   {"direction_label", c.direction_label},
                   {"azimuth_deg", c.azimuth_deg},
                   {"start_s", c.start_s},
                   {"end_s", c.end_s},
                   {"stream_position", c.stream_position}});
  return arr.dump(2);
}

std::vector<Chunk> chunks_from_json(const std::string& text) {
  try {
    const auto arr = json::parse(text);
    if (!arr.is_array()) throw Error(ErrorCode::CorruptFile, "chunk metadata is not an array");
    std::vector<Chunk> out;
    for (const auto& o : arr)
      out.push_back({o.at("chunk_id").get<std::uint64_t>(), o.at("text").get<std::string>(),
                     o.at("direction_label").get<std::string>(), o.at("azimuth_deg").get<double>(),
                     o.at("start_s").get<double>(), o.at("end_s").get<double>(),
                     o.at("stream_position").get<std::size_t>()});
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("bad chunk metadata: ") + e.what());
  }
}

std::vector<std::uint8_t> encode_index(const VectorIndex& index) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + index.matrix().size() * 4 + index.size() * 8);
  for (char c : std::string_view("BFLM")) out.push_back(std::uint8_t(c));
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint64_t>(out, index.size());
  put_le<std::uint32_t>(out, std::uint32_t(index.dim()));
  for (float f : index.matrix()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  for (auto id : index.ids()) put_le<std::uint64_t>(out, id);
  return out;
}

VectorIndex decode_index(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), "BFLM", 4) != 0)
    throw Error(ErrorCode::CorruptFile, "index file lacks the BFLM header");
  const auto* p = bytes.data();
  const auto version = get_le<std::uint32_t>(p + 4);
  if (version != kFormatVersion)
    throw Error(ErrorCode::CorruptFile, "unsupported index version " + std::to_string(version));
  const auto n = get_le<std::uint64_t>(p + 8);
  const auto d = get_le<std::uint32_t>(p + 16);
  if (d == 0) throw Error(ErrorCode::CorruptFile, "index dim is zero");
  const std::size_t body = bytes.size() - kHeaderBytes;
  // Guard the size arithmetic against absurd headers before multiplying.
  if (n > body / (std::uint64_t(d) * 4 + 8) + 1 || body != n * (std::uint64_t(d) * 4 + 8))
    throw Error(ErrorCode::CorruptFile, "index file length does not match its header");
  p += kHeaderBytes;
  std::vector<float> matrix(n * d);
  for (auto& f : matrix) {
    f = std::bit_cast<float>(get_le<std::uint32_t>(p));
    p += 4;
  }
  std::vector<std::uint64_t> ids(n);
  for (auto& id : ids) {
    id = get_le<std::uint64_t>(p);
    p += 8;
  }
  return VectorIndex::from_rows(d, std::move(matrix), std::move(ids));
}

void save_index(const VectorIndex& index, const MetadataStore& store,
                const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  const auto bytes = encode_index(index);
  write_atomically(directory / kIndexFile, bytes.data(), bytes.size());
  const auto chunks = store.all();
  const auto text = chunks_to_json(chunks);
  write_atomically(directory / kChunksFile, text.data(), text.size());
}

LoadedIndex load_index(const std::filesystem::path& directory) {
  const auto bytes = read_bytes(directory / kIndexFile);
  LoadedIndex out{decode_index(bytes), {}};
  const auto text = read_bytes(directory / kChunksFile);
  for (auto& c : chunks_from_json(std::string(text.begin(), text.end()))) {
    try {
      out.store.add(std::move(c));
    } catch (const Error& e) {
      throw Error(ErrorCode::CorruptFile, e.what());
    }
  }
  const std::set<std::uint64_t> index_ids(out.index.ids().begin(), out.index.ids().end());
  if (index_ids.size() != out.store.size())
    throw Error(ErrorCode::CorruptFile, "index and chunk metadata disagree on ids");
  for (auto id : index_ids)
    if (!out.store.contains(id))
      throw Error(ErrorCode::CorruptFile, "index id " + std::to_string(id) + " has no metadata");
  return out;
}

SharedIndex::SharedIndex(std::size_t dim)
    : current_(std::make_shared<const IndexSnapshot>(IndexSnapshot{VectorIndex(dim), {}})) {}

SharedIndex::SharedIndex(IndexSnapshot initial)
    : current_(std::make_shared<const IndexSnapshot>(std::move(initial))) {}

std::shared_ptr<const IndexSnapshot> SharedIndex::snapshot() const {
  std::lock_guard lock(mutex_);
  return current_;
}

void SharedIndex::ingest(std::span<const Chunk> chunks, std::span<const EmbeddingVector> vectors) {
  if (chunks.size() != vectors.size())
    throw Error(ErrorCode::DimensionMismatch, "chunks and vectors differ in count");
  std::lock_guard writer(writer_);
  auto next = std::make_shared<IndexSnapshot>(*snapshot());
  std::vector<std::uint64_t> ids;
  for (const auto& c : chunks) ids.push_back(c.chunk_id);
  next->index.add(ids, vectors);
  for (const auto& c : chunks) next->store.add(c);
  std::lock_guard lock(mutex_);
  current_ = std::move(next);
}

}  // namespace beamrecall::index
