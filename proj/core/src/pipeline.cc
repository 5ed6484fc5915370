#include "qdrag/pipeline.h"

#include <algorithm>
#include <cmath>
#include <optional>

#include "qdrag/error.h"
#include "qdrag/text.h"

namespace qdrag {
namespace {

constexpr double kUnitNormTolerance = 1e-6;

class StageTimer {
 public:
  StageTimer(const Clock& clock, double& sink) : clock_(clock), sink_(sink), start_(clock.now()) {}
  ~StageTimer() { sink_ += clock_.now() - start_; }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  const Clock& clock_;
  double& sink_;
  double start_;
};

std::vector<ScoredCandidate> search_one(const std::string& query, const EmbeddingVector& vec,
                                        std::size_t depth, const RetrievalContext& ctx,
                                        StageTimings& timing) {
  StageTimer t(ctx.clock, timing.search);
  std::vector<ScoredCandidate> hits = ctx.index.search(vec, depth);
  for (ScoredCandidate& c : hits) c.origin_query = query;
  return hits;
}

void rerank_against(const std::string& original, std::vector<ScoredCandidate>& pool,
                    const RetrievalContext& ctx, StageTimings& timing) {
  if (ctx.scorer == nullptr) throw ConfigError("reranking variant needs a scorer");
  std::vector<std::string> passages;
  passages.reserve(pool.size());
  for (const ScoredCandidate& c : pool) passages.push_back(encoder_text(ctx.chunks.at(c.chunk_id)));
  StageTimer t(ctx.clock, timing.rerank);
  std::vector<double> scores = ctx.scorer->score_pairs(original, passages);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i].rerank_score = scores[i];
  sort_by_rerank(pool);
}

std::vector<ScoredCandidate> head(const std::vector<ScoredCandidate>& pool, std::size_t k) {
  return {pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(k, pool.size()))};
}

// Embeds and searches every member of the query set at depth k. The original
// query must succeed; failing sub-queries are dropped with a warning.
std::vector<ScoredCandidate> fan_out(const QueryBundle& bundle, const RetrievalContext& ctx,
                                     RetrievalOutcome& out) {
  std::vector<std::string> queries = query_set(bundle);
  std::vector<std::optional<EmbeddingVector>> vecs(queries.size());
  {
    StageTimer t(ctx.clock, out.timing.embed);
    vecs[0] = ctx.embedder.embed(queries[0]);
    if (queries.size() > 1) {
      std::span<const std::string> subs(queries.begin() + 1, queries.end());
      try {
        std::vector<EmbeddingVector> batch = ctx.embedder.embed_texts(subs);
        for (std::size_t i = 0; i < batch.size(); ++i) vecs[i + 1] = std::move(batch[i]);
      } catch (const Error&) {
        // Isolate the failing sub-queries.
        for (std::size_t i = 1; i < queries.size(); ++i) {
          try {
            vecs[i] = ctx.embedder.embed(queries[i]);
          } catch (const Error& e) {
            out.warnings.push_back("sub-query dropped (embedding failed): '" + queries[i] +
                                   "': " + e.what());
          }
        }
      }
    }
  }

  bool non_unit = false;
  std::vector<std::vector<ScoredCandidate>> per_query;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (!vecs[i]) continue;
    if (std::abs(vecs[i]->norm() - 1.0) > kUnitNormTolerance) non_unit = true;
    if (i == 0) {
      per_query.push_back(search_one(queries[i], *vecs[i], ctx.k, ctx, out.timing));
      continue;
    }
    try {
      per_query.push_back(search_one(queries[i], *vecs[i], ctx.k, ctx, out.timing));
      out.sub_queries.push_back(queries[i]);
    } catch (const Error& e) {
      out.warnings.push_back("sub-query dropped (search failed): '" + queries[i] + "': " +
                             e.what());
    }
  }
  if (non_unit && per_query.size() > 1) {
    out.warnings.push_back(
        "query embeddings are not unit-norm; raw inner products are compared across queries");
  }
  return merge_by_retrieval_score(per_query);
}

RetrievalOutcome start(const std::string& query_id, SystemVariant variant,
                       const RetrievalContext& ctx) {
  if (ctx.k == 0) throw ConfigError("k must be at least 1");
  RetrievalOutcome out;
  out.query_id = query_id;
  out.variant = variant;
  return out;
}

}  // namespace

std::string_view to_string(SystemVariant v) {
  switch (v) {
    case SystemVariant::kNaive:
      return "naive";
    case SystemVariant::kQd:
      return "qd";
    case SystemVariant::kRr:
      return "rr";
    case SystemVariant::kQdRr:
      return "qd_rr";
  }
  return "naive";
}

SystemVariant parse_variant(std::string_view name) {
  const std::string n = text::to_lower(name);
  if (n == "naive") return SystemVariant::kNaive;
  if (n == "qd") return SystemVariant::kQd;
  if (n == "rr") return SystemVariant::kRr;
  if (n == "qd_rr" || n == "qd+rr" || n == "qdrr") return SystemVariant::kQdRr;
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected naive, qd, rr, qd_rr)");
}

bool uses_decomposition(SystemVariant v) {
  return v == SystemVariant::kQd || v == SystemVariant::kQdRr;
}

bool uses_reranker(SystemVariant v) { return v == SystemVariant::kRr || v == SystemVariant::kQdRr; }

ChunkStore::ChunkStore(std::vector<Chunk> chunks) : chunks_(std::move(chunks)) {
  for (std::size_t i = 0; i < chunks_.size(); ++i) {
    if (!by_id_.emplace(chunks_[i].chunk_id, i).second) {
      throw DataError("duplicate chunk id " + chunks_[i].chunk_id);
    }
  }
}

const Chunk& ChunkStore::at(std::string_view chunk_id) const {
  auto it = by_id_.find(std::string(chunk_id));
  if (it == by_id_.end()) throw DataError("unknown chunk id " + std::string(chunk_id));
  return chunks_[it->second];
}

bool ChunkStore::contains(std::string_view chunk_id) const {
  return by_id_.contains(std::string(chunk_id));
}

std::vector<ScoredCandidate> merge_by_retrieval_score(
    std::span<const std::vector<ScoredCandidate>> per_query) {
  std::vector<ScoredCandidate> merged;
  std::unordered_map<std::string, std::size_t> slot;
  for (const std::vector<ScoredCandidate>& list : per_query) {
    for (const ScoredCandidate& c : list) {
      auto [it, inserted] = slot.emplace(c.chunk_id, merged.size());
      if (inserted) {
        merged.push_back(c);
      } else if (c.retrieval_score > merged[it->second].retrieval_score) {
        merged[it->second] = c;
      }
    }
  }
  std::sort(merged.begin(), merged.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.retrieval_score != b.retrieval_score) return a.retrieval_score > b.retrieval_score;
    return a.position < b.position;
  });
  return merged;
}

void sort_by_rerank(std::vector<ScoredCandidate>& candidates) {
  std::sort(candidates.begin(), candidates.end(),
            [](const ScoredCandidate& a, const ScoredCandidate& b) {
              const double ra = a.rerank_score.value_or(-HUGE_VAL);
              const double rb = b.rerank_score.value_or(-HUGE_VAL);
              if (ra != rb) return ra > rb;
              if (a.retrieval_score != b.retrieval_score) {
                return a.retrieval_score > b.retrieval_score;
              }
              return a.position < b.position;
            });
}

RetrievalOutcome retrieve_naive(const std::string& query, const RetrievalContext& ctx) {
  RetrievalOutcome out = start({}, SystemVariant::kNaive, ctx);
  EmbeddingVector vec = [&] {
    StageTimer t(ctx.clock, out.timing.embed);
    return ctx.embedder.embed(query);
  }();
  out.pool = search_one(query, vec, ctx.k, ctx, out.timing);
  out.pool_size = out.pool.size();
  out.final = out.pool;
  return out;
}

RetrievalOutcome retrieve_qd(const QueryBundle& bundle, const RetrievalContext& ctx) {
  RetrievalOutcome out = start(bundle.query_id, SystemVariant::kQd, ctx);
  out.pool = fan_out(bundle, ctx, out);
  out.pool_size = out.pool.size();
  out.final = head(out.pool, ctx.k);
  return out;
}

RetrievalOutcome retrieve_rr(const std::string& query, const RetrievalContext& ctx) {
  RetrievalOutcome out = start({}, SystemVariant::kRr, ctx);
  EmbeddingVector vec = [&] {
    StageTimer t(ctx.clock, out.timing.embed);
    return ctx.embedder.embed(query);
  }();
  out.pool = search_one(query, vec, 2 * ctx.k, ctx, out.timing);
  out.pool_size = out.pool.size();
  rerank_against(query, out.pool, ctx, out.timing);
  out.final = head(out.pool, ctx.k);
  return out;
}

RetrievalOutcome retrieve_qd_rr(const QueryBundle& bundle, const RetrievalContext& ctx) {
  RetrievalOutcome out = start(bundle.query_id, SystemVariant::kQdRr, ctx);
  out.pool = fan_out(bundle, ctx, out);
  out.pool_size = out.pool.size();
  rerank_against(bundle.original, out.pool, ctx, out.timing);
  out.final = head(out.pool, ctx.k);
  return out;
}

RetrievalOutcome retrieve(SystemVariant variant, const QueryBundle& bundle,
                          const RetrievalContext& ctx) {
  RetrievalOutcome out;
  switch (variant) {
    case SystemVariant::kNaive:
      out = retrieve_naive(bundle.original, ctx);
      break;
    case SystemVariant::kQd:
      out = retrieve_qd(bundle, ctx);
      break;
    case SystemVariant::kRr:
      out = retrieve_rr(bundle.original, ctx);
      break;
    case SystemVariant::kQdRr:
      out = retrieve_qd_rr(bundle, ctx);
      break;
  }
  out.query_id = bundle.query_id;
  return out;
}

AnswerPrompt::AnswerPrompt(std::string tmpl) : template_(std::move(tmpl)) {
  if (text::count_occurrences(template_, "{question}") != 1 ||
      text::count_occurrences(template_, "{passages}") != 1) {
    throw ConfigError("answer prompt needs exactly one {question} and one {passages} slot");
  }
}

AnswerPrompt AnswerPrompt::from_file(const std::filesystem::path& path) {
  return AnswerPrompt(read_file(path));
}

std::string AnswerPrompt::default_template() {
  return "Answer the question using the passages below. Reply with a short answer only.\n"
         "\n"
         "Question: {question}\n"
         "\n"
         "Passages:\n"
         "{passages}\n"
         "Answer:";
}

std::string AnswerPrompt::render(std::string_view question,
                                 std::span<const Chunk* const> passages) const {
  std::string block;
  for (std::size_t i = 0; i < passages.size(); ++i) {
    block += "[" + std::to_string(i + 1) + "] Title: " + passages[i]->title + "\n";
    block += "Text: " + passages[i]->text + "\n";
  }
  // Substitute passages first so a literal "{question}" inside a passage stays put.
  std::string out = text::replace_all(template_, "{passages}", block);
  const std::size_t pos = out.find("{question}");
  out.replace(pos, std::string_view("{question}").size(), question);
  return out;
}

GenerationOutcome generate_answer(const std::string& query_id, const std::string& question,
                                  const RetrievalOutcome& outcome, const ChunkStore& chunks,
                                  ChatProvider& provider, const SamplingParams& params,
                                  const AnswerPrompt& prompt) {
  if (outcome.final.empty()) {
    throw ConfigError(query_id + ": cannot generate an answer without retrieved passages");
  }
  std::vector<const Chunk*> passages;
  passages.reserve(outcome.final.size());
  for (const ScoredCandidate& c : outcome.final) passages.push_back(&chunks.at(c.chunk_id));
  const std::string rendered = prompt.render(question, passages);
  GenerationOutcome out;
  out.query_id = query_id;
  out.prompt_chars = rendered.size();
  try {
    out.answer_text = provider.chat_complete(rendered, params);
  } catch (const Error& e) {
    throw ProviderError(query_id + ": answer generation failed: " + e.what());
  }
  out.provider_meta["provider"] = provider.name();
  return out;
}

}  // namespace qdrag
