#include "qdrag/vector_index.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

#include "qdrag/error.h"
#include "qdrag/providers.h"

namespace qdrag {
namespace {

constexpr std::array<char, 8> kMagic = {'Q', 'D', 'R', 'A', 'G', 'I', 'D', 'X'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
T byteswap(T value) {
  T out{};
  auto* src = reinterpret_cast<const unsigned char*>(&value);
  auto* dst = reinterpret_cast<unsigned char*>(&out);
  for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
  return out;
}

template <typename T>
void write_le(std::ostream& out, T value) {
  if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IndexError("index file is truncated");
  if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
  return value;
}

}  // namespace

VectorIndex::VectorIndex(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw IndexError("index dimension must be positive");
}

void VectorIndex::add(std::string chunk_id, const EmbeddingVector& vec) {
  if (vec.dim() != dim_) {
    throw IndexError("vector for " + chunk_id + " has dim " + std::to_string(vec.dim()) +
                     ", index has dim " + std::to_string(dim_));
  }
  if (!positions_.emplace(chunk_id, ids_.size()).second) {
    throw IndexError("duplicate chunk id " + chunk_id);
  }
  ids_.push_back(std::move(chunk_id));
  data_.insert(data_.end(), vec.values().begin(), vec.values().end());
}

std::optional<std::size_t> VectorIndex::position_of(std::string_view chunk_id) const {
  auto it = positions_.find(std::string(chunk_id));
  if (it == positions_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> VectorIndex::vector(std::size_t position) const {
  if (position >= ids_.size()) throw IndexError("index position out of range");
  return std::span<const double>(data_).subspan(position * dim_, dim_);
}

std::vector<ScoredCandidate> VectorIndex::search(const EmbeddingVector& query,
                                                 std::size_t k) const {
  if (ids_.empty()) throw IndexError("search on an empty index");
  if (k == 0) throw IndexError("search needs k >= 1");
  if (query.dim() != dim_) {
    throw IndexError("query has dim " + std::to_string(query.dim()) + ", index has dim " +
                     std::to_string(dim_));
  }
  const std::size_t n = ids_.size();
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = inner_product(query.values(), vector(i));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t take = std::min(k, n);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });

  std::vector<ScoredCandidate> out;
  out.reserve(take);
  for (std::size_t r = 0; r < take; ++r) {
    ScoredCandidate c;
    c.chunk_id = ids_[order[r]];
    c.position = order[r];
    c.retrieval_score = scores[order[r]];
    out.push_back(std::move(c));
  }
  return out;
}

void VectorIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IndexError("cannot write index file " + path.string());
  out.write(kMagic.data(), kMagic.size());
  write_le<std::uint32_t>(out, kVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
  write_le<std::uint64_t>(out, ids_.size());
  for (double v : data_) write_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw IndexError("failed writing index file " + path.string());
}

VectorIndex VectorIndex::load(const std::filesystem::path& path,
                              std::span<const std::string> chunk_ids) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IndexError("cannot open index file " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IndexError(path.string() + ": bad magic");
  const auto version = read_le<std::uint32_t>(in);
  if (version != kVersion) {
    throw IndexError(path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto dim = read_le<std::uint32_t>(in);
  const auto count = read_le<std::uint64_t>(in);
  if (count != chunk_ids.size()) {
    throw IndexError(path.string() + ": holds " + std::to_string(count) +
                     " vectors but the manifest lists " + std::to_string(chunk_ids.size()) +
                     " chunks");
  }
  const std::uintmax_t expected_size = 8 + 4 + 4 + 8 + count * dim * 8ULL;
  if (std::filesystem::file_size(path) != expected_size) {
    throw IndexError(path.string() + ": file size does not match header");
  }
  VectorIndex index(dim);
  std::vector<double> row(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    for (auto& v : row) v = std::bit_cast<double>(read_le<std::uint64_t>(in));
    index.add(chunk_ids[i], EmbeddingVector(row));
  }
  return index;
}

VectorIndex build_index(std::span<const Chunk> chunks, EmbeddingProvider& embedder,
                        std::size_t batch_size) {
  if (chunks.empty()) throw IndexError("cannot build an index from zero chunks");
  if (batch_size == 0) throw ConfigError("index batch size must be positive");
  std::optional<VectorIndex> index;
  std::vector<std::string> texts;
  for (std::size_t begin = 0; begin < chunks.size(); begin += batch_size) {
    const std::size_t end = std::min(chunks.size(), begin + batch_size);
    texts.clear();
    for (std::size_t i = begin; i < end; ++i) {
      if (chunks[i].text.empty()) throw IndexError("chunk " + chunks[i].chunk_id + " is empty");
      texts.push_back(encoder_text(chunks[i]));
    }
    std::vector<EmbeddingVector> vecs;
    try {
      vecs = embedder.embed_texts(texts);
    } catch (const ProviderError& e) {
      throw IndexError("embedding batch starting at chunk " + std::to_string(begin) +
                       " failed: " + e.what());
    }
    if (!index) index.emplace(vecs.front().dim());
    for (std::size_t i = begin; i < end; ++i) index->add(chunks[i].chunk_id, vecs[i - begin]);
  }
  return std::move(*index);
}

}  // namespace qdrag
