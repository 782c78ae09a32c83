// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <numeric>
#include <set>

#include "beamrecall/error.hpp"
#include "beamrecall/semantic_index.hpp"

namespace beamrecall::index {

VectorIndex::VectorIndex(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::BadConfig, "index dim must be positive");
}

std::span<const float> VectorIndex::row(std::size_t i) const {
  return std::span<const float>(matrix_).subspan(i * dim_, dim_);
}

bool VectorIndex::contains(std::uint64_t id) const { return position_.contains(id); }

void VectorIndex::add(std::span<const std::uint64_t> ids, std::span<const EmbeddingVector> vectors) {
  if (ids.size() != vectors.size())
    throw Error(ErrorCode::DimensionMismatch, "ids and vectors differ in count");
  std::set<std::uint64_t> batch;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (position_.contains(ids[i]) || !batch.insert(ids[i]).second)
      throw Error(ErrorCode::DuplicateId, "chunk id " + std::to_string(ids[i]) + " already indexed");
    if (vectors[i].dim() != dim_)
      throw Error(ErrorCode::DimensionMismatch, "vector dim " + std::to_string(vectors[i].dim()) +
                                                    " != index dim " + std::to_string(dim_));
  }
  matrix_.reserve(matrix_.size() + ids.size() * dim_);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto v = vectors[i].values();
    matrix_.insert(matrix_.end(), v.begin(), v.end());
    position_.emplace(ids[i], ids_.size());
    ids_.push_back(ids[i]);
  }
}

std::vector<SearchHit> VectorIndex::search(const EmbeddingVector& query, std::size_t k) const {
  if (ids_.empty()) throw Error(ErrorCode::EmptyIndex, "search on an empty index");
  if (query.dim() != dim_)
    throw Error(ErrorCode::DimensionMismatch, "query dim " + std::to_string(query.dim()) +
                                                  " != index dim " + std::to_string(dim_));
  const auto q = query.values();
  std::vector<SearchHit> hits(ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    const float* row = matrix_.data() + r * dim_;
    double dot = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) dot += double(row[j]) * double(q[j]);
    hits[r] = {ids_[r], dot};
  }
  const std::size_t take = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + std::ptrdiff_t(take), hits.end(),
                    [](const SearchHit& a, const SearchHit& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.chunk_id < b.chunk_id;
                    });
  hits.resize(take);
  return hits;
}

VectorIndex VectorIndex::from_rows(std::size_t dim, std::vector<float> matrix,
                                   std::vector<std::uint64_t> ids) {
  VectorIndex out(dim);
  if (matrix.size() != ids.size() * dim)
    throw Error(ErrorCode::CorruptFile, "index matrix size does not match ids");
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!out.position_.emplace(ids[i], i).second)
      throw Error(ErrorCode::CorruptFile, "index file repeats id " + std::to_string(ids[i]));
  out.matrix_ = std::move(matrix);
  out.ids_ = std::move(ids);
  return out;
}

}  // namespace beamrecall::index
