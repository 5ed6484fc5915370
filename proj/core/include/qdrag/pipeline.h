#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qdrag/clock.h"
#include "qdrag/corpus.h"
#include "qdrag/decompose.h"
#include "qdrag/providers.h"
#include "qdrag/vector_index.h"

namespace qdrag {

// The four system configurations: single-query retrieval, question
// decomposition, reranking of a 2k pool, and decomposition followed by reranking.
enum class SystemVariant { kNaive, kQd, kRr, kQdRr };

inline constexpr std::array<SystemVariant, 4> kAllVariants = {
    SystemVariant::kNaive, SystemVariant::kQd, SystemVariant::kRr, SystemVariant::kQdRr};

std::string_view to_string(SystemVariant v);
// Accepts naive, qd, rr, qd_rr (also qd+rr). Throws ConfigError otherwise.
SystemVariant parse_variant(std::string_view name);
bool uses_decomposition(SystemVariant v);
bool uses_reranker(SystemVariant v);

struct StageTimings {
  double decompose = 0.0;
  double embed = 0.0;
  double search = 0.0;
  double rerank = 0.0;
  double generate = 0.0;

  // Everything except generation.
  double retrieval() const { return decompose + embed + search + rerank; }

  bool operator==(const StageTimings&) const = default;
};

struct RetrievalOutcome {
  std::string query_id;
  SystemVariant variant = SystemVariant::kNaive;
  std::vector<std::string> sub_queries;
  // Deduplicated candidate pool before final selection, in selection order.
  std::vector<ScoredCandidate> pool;
  std::vector<ScoredCandidate> final;
  std::size_t pool_size = 0;
  StageTimings timing;
  std::vector<std::string> warnings;
};

struct GenerationOutcome {
  std::string query_id;
  std::string answer_text;
  std::size_t prompt_chars = 0;
  std::map<std::string, std::string> provider_meta;
};

// Chunk lookup by id for reranking and prompt assembly.
class ChunkStore {
 public:
  ChunkStore() = default;
  explicit ChunkStore(std::vector<Chunk> chunks);

  const Chunk& at(std::string_view chunk_id) const;
  bool contains(std::string_view chunk_id) const;
  std::span<const Chunk> chunks() const { return chunks_; }

 private:
  std::vector<Chunk> chunks_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Everything a retrieval call needs. `scorer` may be null for variants without reranking.
struct RetrievalContext {
  const VectorIndex& index;
  const ChunkStore& chunks;
  EmbeddingProvider& embedder;
  RerankProvider* scorer = nullptr;
  const Clock& clock;
  std::size_t k = 10;
};

RetrievalOutcome retrieve_naive(const std::string& query, const RetrievalContext& ctx);
RetrievalOutcome retrieve_qd(const QueryBundle& bundle, const RetrievalContext& ctx);
RetrievalOutcome retrieve_rr(const std::string& query, const RetrievalContext& ctx);
RetrievalOutcome retrieve_qd_rr(const QueryBundle& bundle, const RetrievalContext& ctx);
RetrievalOutcome retrieve(SystemVariant variant, const QueryBundle& bundle,
                          const RetrievalContext& ctx);

// Union of per-query candidate lists deduplicated by chunk id, keeping the highest
// retrieval score (earlier list wins ties), sorted by retrieval score then position.
std::vector<ScoredCandidate> merge_by_retrieval_score(
    std::span<const std::vector<ScoredCandidate>> per_query);

// Rerank order: rerank score desc, retrieval score desc, insertion position asc.
void sort_by_rerank(std::vector<ScoredCandidate>& candidates);

// Answer-generation prompt with {question} and {passages} slots.
class AnswerPrompt {
 public:
  explicit AnswerPrompt(std::string tmpl = default_template());
  static AnswerPrompt from_file(const std::filesystem::path& path);
  static std::string default_template();

  // Passages appear in the given order, each as "[i] Title: ...\nText: ...".
  std::string render(std::string_view question, std::span<const Chunk* const> passages) const;

 private:
  std::string template_;
};

GenerationOutcome generate_answer(const std::string& query_id, const std::string& question,
                                  const RetrievalOutcome& outcome, const ChunkStore& chunks,
                                  ChatProvider& provider, const SamplingParams& params,
                                  const AnswerPrompt& prompt = AnswerPrompt());

}  // namespace qdrag
