#include "qdrag/harness.h"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "qdrag/error.h"
#include "qdrag/http_providers.h"
#include "qdrag/synthetic.h"
#include "qdrag/text.h"

namespace qdrag {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxListedWarnings = 50;

struct LoadedData {
  std::vector<SourceDocument> documents;  // global pool (empty for per-question runs)
  std::vector<QAExample> examples;
  std::vector<std::string> warnings;
};

// HotpotQA paragraphs pooled across questions, first occurrence of a title wins.
std::vector<SourceDocument> pool_paragraphs(const std::vector<QAExample>& examples) {
  std::vector<SourceDocument> out;
  std::set<std::string> seen;
  for (const QAExample& ex : examples) {
    for (const SourceDocument& d : ex.local_context) {
      if (seen.insert(d.doc_id).second) out.push_back(d);
    }
  }
  return out;
}

LoadedData load_data(const RunConfig& c, bool need_documents) {
  LoadedData d;
  switch (c.dataset) {
    case Dataset::kSynthetic: {
      SyntheticSuite s = make_synthetic_multihop(c.synthetic_entities, c.synthetic_queries, c.seed);
      d.documents = std::move(s.documents);
      d.examples = std::move(s.examples);
      break;
    }
    case Dataset::kMultihopRag:
      if (need_documents) d.documents = load_multihop_corpus(c.corpus_path);
      if (!c.queries_path.empty()) d.examples = load_multihop_queries(c.queries_path);
      break;
    case Dataset::kHotpotQa: {
      HotpotSplit split = load_hotpotqa_split(c.queries_path);
      d.examples = std::move(split.examples);
      d.warnings = std::move(split.warnings);
      break;
    }
  }
  if (c.limit && d.examples.size() > *c.limit) d.examples.resize(*c.limit);
  if (c.dataset == Dataset::kHotpotQa && need_documents) d.documents = pool_paragraphs(d.examples);
  return d;
}

// Offline stand-in for the decomposition model on questions without a scripted
// decomposition: clause splitting at commas, semicolons and coordinators.
std::vector<std::string> heuristic_subqueries(const std::string& question) {
  static const std::regex splitter(R"(\s*(?:,|;|\band\b|\bor\b|\bwhile\b|\bwhereas\b)\s*)",
                                   std::regex::icase);
  std::vector<std::string> out;
  std::sregex_token_iterator it(question.begin(), question.end(), splitter, -1);
  for (; it != std::sregex_token_iterator(); ++it) {
    std::string part(text::trim(it->str()));
    if (text::content_tokens(part).size() >= 3) out.push_back(std::move(part));
  }
  if (out.size() < 2) out.clear();
  return out;
}

std::string numbered(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += std::to_string(i + 1) + ". " + items[i] + "\n";
  }
  return out;
}

struct Providers {
  std::shared_ptr<TraceSink> sink;
  std::unique_ptr<EmbeddingProvider> embed;
  std::unique_ptr<RerankProvider> rerank;
  std::unique_ptr<ChatProvider> decompose_chat;
  std::unique_ptr<ChatProvider> answer_chat;
};

Providers make_providers(const RunConfig& c, const std::vector<QAExample>& examples,
                         const DecomposePrompt& prompt) {
  Providers p;
  if (c.trace && !c.all_mock()) {
    p.sink = std::make_shared<TraceSink>(c.out_dir / "provider_trace.jsonl");
  }
  if (c.embed.mock) {
    p.embed = std::make_unique<HashEmbedder>(c.mock_dim, c.seed, c.embed.latency);
  } else {
    p.embed = std::make_unique<HttpEmbedder>(c.embed.endpoint, p.sink);
  }
  if (c.rerank.mock) {
    p.rerank = std::make_unique<TokenOverlapScorer>(c.rerank.latency);
  } else {
    p.rerank = std::make_unique<HttpReranker>(c.rerank.endpoint, p.sink);
  }
  if (c.chat.mock) {
    std::map<std::string, std::string> table;
    for (const QAExample& ex : examples) {
      std::vector<std::string> subs =
          ex.scripted_subqueries.empty() ? heuristic_subqueries(ex.question) : ex.scripted_subqueries;
      table[prompt.render(ex.question)] = subs.empty() ? ex.question : numbered(subs);
    }
    p.decompose_chat = std::make_unique<ScriptedChat>(std::move(table), std::string("none"),
                                                      c.chat.latency);
    p.answer_chat = std::make_unique<ScriptedChat>(std::map<std::string, std::string>{},
                                                   ScriptedChat::Fallback(first_passage_title),
                                                   c.chat.latency);
  } else {
    p.decompose_chat = std::make_unique<HttpChat>(c.chat.endpoint, p.sink);
    p.answer_chat = std::make_unique<HttpChat>(c.chat.endpoint, p.sink);
  }
  return p;
}

struct GlobalIndex {
  std::vector<Chunk> chunks;
  std::optional<VectorIndex> index;
  std::unique_ptr<ChunkStore> store;
};

GlobalIndex load_or_build_index(const RunConfig& c, const LoadedData& data,
                                EmbeddingProvider& embedder, std::vector<std::string>& warnings) {
  GlobalIndex g;
  if (!c.index_dir.empty()) {
    g.chunks = read_chunk_manifest(c.index_dir / "chunks.jsonl");
    std::vector<std::string> ids;
    ids.reserve(g.chunks.size());
    for (const Chunk& ch : g.chunks) ids.push_back(ch.chunk_id);
    g.index.emplace(VectorIndex::load(c.index_dir / "index.bin", ids));
    const std::filesystem::path meta_path = c.index_dir / "index_meta.json";
    if (std::filesystem::exists(meta_path)) {
      const json meta = read_json_file(meta_path);
      if (meta.value("embedder", "") != embedder.name()) {
        warnings.push_back("index was built with embedder '" + meta.value("embedder", "") +
                           "' but queries use '" + embedder.name() + "'");
      }
    }
    spdlog::info("loaded index with {} chunks from {}", g.chunks.size(), c.index_dir.string());
  } else {
    g.chunks = chunk_corpus(data.documents, c.effective_chunk_policy());
    g.index.emplace(build_index(g.chunks, embedder, c.index_batch_size));
    spdlog::info("indexed {} chunks", g.chunks.size());
  }
  g.store = std::make_unique<ChunkStore>(g.chunks);
  return g;
}

struct Slot {
  std::optional<TraceRecord> trace;
  std::optional<FailureRecord> failure;
};

struct SharedDecomposition {
  QueryBundle bundle;
  double seconds = 0.0;
  std::vector<std::string> warnings;
};

class Runner {
 public:
  Runner(const RunConfig& c, const LoadedData& data, Providers& providers, const Clock& clock,
         Decomposer& decomposer, const AnswerPrompt& answer_prompt, const GlobalIndex* global)
      : c_(c),
        data_(data),
        providers_(providers),
        clock_(clock),
        decomposer_(decomposer),
        answer_prompt_(answer_prompt),
        global_(global),
        slots_(c.variants.size() * data.examples.size()) {}

  void run() {
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
      for (std::size_t i = next++; i < data_.examples.size(); i = next++) run_example(i);
    };
    const std::size_t n_threads = std::min(c_.workers, std::max<std::size_t>(1, data_.examples.size()));
    if (n_threads <= 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
    }
  }

  std::vector<Slot>& slots() { return slots_; }

 private:
  Slot& slot(std::size_t variant_idx, std::size_t example_idx) {
    return slots_[variant_idx * data_.examples.size() + example_idx];
  }

  void fail_all(std::size_t example_idx, const std::string& stage, const std::string& message) {
    for (std::size_t v = 0; v < c_.variants.size(); ++v) {
      slot(v, example_idx).failure = FailureRecord{data_.examples[example_idx].query_id,
                                                   std::string(to_string(c_.variants[v])), stage,
                                                   message};
    }
  }

  void run_example(std::size_t i) {
    const QAExample& ex = data_.examples[i];
    std::unique_ptr<ChunkStore> local_store;
    std::optional<VectorIndex> local_index;
    const VectorIndex* index = nullptr;
    const ChunkStore* store = nullptr;
    try {
      if (global_ != nullptr) {
        index = &*global_->index;
        store = global_->store.get();
      } else {
        local_store =
            std::make_unique<ChunkStore>(chunk_corpus(ex.local_context, c_.effective_chunk_policy()));
        local_index.emplace(build_index(local_store->chunks(), *providers_.embed, c_.index_batch_size));
        index = &*local_index;
        store = local_store.get();
      }
    } catch (const std::exception& e) {
      fail_all(i, "index", e.what());
      return;
    }
    const GoldResolution gold = resolve_gold_chunks(ex, store->chunks());
    RetrievalContext ctx{*index, *store, *providers_.embed, providers_.rerank.get(), clock_, c_.k};

    std::optional<SharedDecomposition> shared;
    for (std::size_t v = 0; v < c_.variants.size(); ++v) {
      const SystemVariant variant = c_.variants[v];
      std::string stage = "decompose";
      try {
        QueryBundle bundle{ex.query_id, ex.question, {}, Provenance::kNone};
        double decompose_seconds = 0.0;
        std::vector<std::string> warnings;
        if (uses_decomposition(variant)) {
          if (!shared) {
            SharedDecomposition d;
            VirtualClock::reset();
            const double t0 = clock_.now();
            d.bundle = decomposer_.run(ex.query_id, ex.question, &d.warnings);
            d.seconds = clock_.now() - t0;
            shared = std::move(d);
          }
          bundle = shared->bundle;
          decompose_seconds = shared->seconds;
          warnings = shared->warnings;
        }
        stage = "retrieve";
        VirtualClock::reset();
        RetrievalOutcome outcome = retrieve(variant, bundle, ctx);
        outcome.timing.decompose = decompose_seconds;

        TraceRecord t;
        t.query_id = ex.query_id;
        t.variant = std::string(to_string(variant));
        t.question = ex.question;
        t.sub_queries = bundle.sub_queries;
        t.provenance = std::string(to_string(bundle.provenance));
        t.pool = outcome.pool;
        t.pool_size = outcome.pool_size;
        for (const ScoredCandidate& sc : outcome.final) {
          t.final_ids.push_back(sc.chunk_id);
          t.final_scores.push_back(uses_reranker(variant) && sc.rerank_score ? *sc.rerank_score
                                                                              : sc.retrieval_score);
        }
        if (c_.generation_enabled()) {
          stage = "generate";
          const double t0 = clock_.now();
          GenerationOutcome gen = generate_answer(ex.query_id, ex.question, outcome, *store,
                                                  *providers_.answer_chat, c_.sampling,
                                                  answer_prompt_);
          outcome.timing.generate = clock_.now() - t0;
          t.answer_text = gen.answer_text;
        }
        t.timing = outcome.timing;
        t.question_type = ex.question_type;
        t.gold_chunk_ids = gold.chunk_ids;
        t.gold_evidence_count = ex.gold_evidence.size();
        t.unresolvable = gold.unresolvable;
        t.gold_answer = ex.gold_answer;
        for (const EvidenceSpec& e : ex.gold_evidence) {
          if (e.sentence_index) t.gold_sp.emplace_back(e.title, *e.sentence_index);
        }
        if (c_.effective_chunk_policy().kind() == ChunkPolicy::Kind::kSentence) {
          for (const std::string& id : t.final_ids) {
            const Chunk& ch = store->at(id);
            t.predicted_sp.emplace_back(ch.title, static_cast<int>(ch.ordinal));
          }
        }
        t.warnings = std::move(warnings);
        t.warnings.insert(t.warnings.end(), outcome.warnings.begin(), outcome.warnings.end());
        t.warnings.insert(t.warnings.end(), gold.warnings.begin(), gold.warnings.end());
        slot(v, i).trace = std::move(t);
      } catch (const std::exception& e) {
        slot(v, i).failure =
            FailureRecord{ex.query_id, std::string(to_string(variant)), stage, e.what()};
      }
    }
  }

  const RunConfig& c_;
  const LoadedData& data_;
  Providers& providers_;
  const Clock& clock_;
  Decomposer& decomposer_;
  const AnswerPrompt& answer_prompt_;
  const GlobalIndex* global_;
  std::vector<Slot> slots_;
};

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

json failures_json(const std::vector<FailureRecord>& failures) {
  json list = json::array();
  for (const FailureRecord& f : failures) {
    list.push_back({{"query_id", f.query_id},
                    {"variant", f.variant},
                    {"stage", f.stage},
                    {"error", f.message}});
  }
  return {{"count", failures.size()}, {"failures", list}};
}

void write_report_files(const std::filesystem::path& dir, const EvalReport& report,
                        std::span<const TraceRecord> traces) {
  write_text(dir / "report.json", to_json(report).dump(2) + "\n");
  write_text(dir / "report.txt", render_text(report));
  write_text(dir / "metrics.jsonl", metrics_jsonl(traces));
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw ConfigError("output directory " + dir.string() + " is not writable");
  }
}

}  // namespace

RunResult run_experiment(const RunConfig& config) {
  config.validate();
  ensure_dir(config.out_dir);

  LoadedData data = load_data(config, !config.per_question_index() && config.index_dir.empty());
  const DecomposePrompt decompose_prompt =
      config.decompose_prompt_path.empty()
          ? DecomposePrompt(DecomposePrompt::default_template(), config.max_subqueries)
          : DecomposePrompt::from_file(config.decompose_prompt_path, config.max_subqueries);
  const AnswerPrompt answer_prompt = config.answer_prompt_path.empty()
                                         ? AnswerPrompt()
                                         : AnswerPrompt::from_file(config.answer_prompt_path);
  Providers providers = make_providers(config, data.examples, decompose_prompt);

  std::vector<std::string> run_warnings = data.warnings;
  std::unique_ptr<SubqueryCache> cache;
  if (!config.cache_path.empty()) {
    cache = std::make_unique<SubqueryCache>(config.cache_path);
    for (const std::string& w : cache->load_warnings()) run_warnings.push_back(w);
  }
  Decomposer decomposer(*providers.decompose_chat, decompose_prompt, config.sampling, cache.get());

  std::optional<GlobalIndex> global;
  if (!config.per_question_index()) {
    global.emplace(load_or_build_index(config, data, *providers.embed, run_warnings));
  }

  const VirtualClock virtual_clock;
  const SteadyClock steady_clock;
  const bool use_virtual = config.uses_virtual_clock();
  const Clock& clock = use_virtual ? static_cast<const Clock&>(virtual_clock) : steady_clock;

  const std::size_t decompose_calls_before = providers.decompose_chat->calls();
  Runner runner(config, data, providers, clock, decomposer, answer_prompt,
                global ? &*global : nullptr);
  runner.run();

  RunResult result;
  for (Slot& s : runner.slots()) {
    if (s.trace) result.traces.push_back(std::move(*s.trace));
    if (s.failure) result.failures.push_back(std::move(*s.failure));
  }
  // Slots are variant-major already; within a variant, order by query id.
  const auto variant_rank = [&](const std::string& name) {
    return static_cast<std::size_t>(parse_variant(name));
  };
  std::stable_sort(result.traces.begin(), result.traces.end(),
                   [&](const TraceRecord& a, const TraceRecord& b) {
                     const std::size_t ra = variant_rank(a.variant);
                     const std::size_t rb = variant_rank(b.variant);
                     return ra != rb ? ra < rb : a.query_id < b.query_id;
                   });
  result.decomposer_calls = providers.decompose_chat->calls() - decompose_calls_before;

  result.report = build_report(result.traces, to_json(config), use_virtual ? "virtual" : "steady");
  result.report.provider_calls = {{"embed", providers.embed->calls()},
                                  {"rerank", providers.rerank->calls()},
                                  {"decompose", result.decomposer_calls},
                                  {"generate", providers.answer_chat->calls()}};
  result.report.failures = result.failures.size();
  if (!config.all_mock()) {
    run_warnings.push_back("live providers: results and timings are not deterministic");
  }
  if (run_warnings.size() > kMaxListedWarnings) {
    const std::size_t extra = run_warnings.size() - kMaxListedWarnings;
    run_warnings.resize(kMaxListedWarnings);
    run_warnings.push_back("... and " + std::to_string(extra) + " more data warnings");
  }
  result.report.warnings.insert(result.report.warnings.begin(), run_warnings.begin(),
                                run_warnings.end());

  write_traces(config.out_dir / "traces.jsonl", result.traces);
  write_report_files(config.out_dir, result.report, result.traces);
  write_text(config.out_dir / "failures.json", failures_json(result.failures).dump(2) + "\n");
  spdlog::info("{} traces, {} failures written to {}", result.traces.size(),
               result.failures.size(), config.out_dir.string());
  return result;
}

std::size_t build_and_save_index(const RunConfig& config, const std::filesystem::path& dir) {
  RunConfig c = config;
  c.index_dir.clear();
  c.validate();
  ensure_dir(dir);
  LoadedData data = load_data(c, true);
  const DecomposePrompt prompt(DecomposePrompt::default_template(), c.max_subqueries);
  Providers providers = make_providers(c, {}, prompt);
  const std::vector<Chunk> chunks = chunk_corpus(data.documents, c.effective_chunk_policy());
  const VectorIndex index = build_index(chunks, *providers.embed, c.index_batch_size);
  write_chunk_manifest(dir / "chunks.jsonl", chunks);
  index.save(dir / "index.bin");
  const json meta = {{"embedder", providers.embed->name()},
                     {"dim", index.dim()},
                     {"count", index.size()},
                     {"chunk_policy", c.effective_chunk_policy().describe()},
                     {"dataset", std::string(to_string(c.dataset))}};
  write_text(dir / "index_meta.json", meta.dump(2) + "\n");
  return index.size();
}

EvalReport report_from_traces(const std::filesystem::path& traces_path,
                              const std::filesystem::path& out_dir) {
  const std::vector<TraceRecord> traces = read_traces(traces_path);
  ensure_dir(out_dir);
  json config = {{"traces", traces_path.string()}};
  std::string clock = "unknown";
  const std::filesystem::path sibling = traces_path.parent_path() / "report.json";
  if (std::filesystem::exists(sibling)) {
    const json prior = read_json_file(sibling);
    config = prior.value("config", config);
    clock = prior.value("clock", clock);
  }
  EvalReport report = build_report(traces, std::move(config), std::move(clock));
  write_report_files(out_dir, report, traces);
  return report;
}

void write_synthetic_suite(const RunConfig& config, const std::filesystem::path& dir) {
  ensure_dir(dir);
  const SyntheticSuite s =
      make_synthetic_multihop(config.synthetic_entities, config.synthetic_queries, config.seed);
  write_text(dir / "corpus.json", s.corpus_json.dump(2) + "\n");
  write_text(dir / "queries.json", s.queries_json.dump(2) + "\n");
}

}  // namespace qdrag
