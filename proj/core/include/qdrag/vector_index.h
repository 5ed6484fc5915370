#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qdrag/corpus.h"
#include "qdrag/embedding.h"

namespace qdrag {

class EmbeddingProvider;

struct ScoredCandidate {
  std::string chunk_id;
  std::size_t position = 0;  // insertion position in the index
  double retrieval_score = 0.0;
  std::optional<double> rerank_score;
  std::string origin_query;

  bool operator==(const ScoredCandidate&) const = default;
};

// Flat exact maximum-inner-product index. Vectors are stored row-major in
// insertion order; search scores every entry and never approximates.
class VectorIndex {
 public:
  explicit VectorIndex(std::size_t dim);

  // Throws IndexError on a dimension mismatch or a duplicate chunk id.
  void add(std::string chunk_id, const EmbeddingVector& vec);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::string& chunk_id(std::size_t position) const { return ids_.at(position); }
  std::optional<std::size_t> position_of(std::string_view chunk_id) const;
  std::span<const double> vector(std::size_t position) const;

  // min(k, size()) candidates by descending inner product, ties by ascending
  // insertion position. Safe to call concurrently.
  std::vector<ScoredCandidate> search(const EmbeddingVector& query, std::size_t k) const;

  // Binary sidecar: "QDRAGIDX", u32 version, u32 dim, u64 count, then count
  // records of dim little-endian float64 values. Chunk ids live in the manifest.
  void save(const std::filesystem::path& path) const;
  static VectorIndex load(const std::filesystem::path& path,
                          std::span<const std::string> chunk_ids);

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> positions_;
};

// Embeds encoder_text(chunk) for every chunk in batches and inserts in input order.
VectorIndex build_index(std::span<const Chunk> chunks, EmbeddingProvider& embedder,
                        std::size_t batch_size = 64);

}  // namespace qdrag
