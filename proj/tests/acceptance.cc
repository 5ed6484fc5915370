// Acceptance suite: one line per criterion, PASS / FAIL / SKIP, then a summary.
// Exit status is 1 if any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "mock_fixtures.h"
#include "oracles.h"
#include "qdrag/config.h"
#include "qdrag/corpus.h"
#include "qdrag/decompose.h"
#include "qdrag/harness.h"
#include "qdrag/metrics.h"
#include "qdrag/pipeline.h"
#include "qdrag/synthetic.h"
#include "qdrag/text.h"

using namespace qdrag;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Verdict {
  Status status = Status::kPass;
  std::string detail;
};

Verdict pass(std::string d) { return {Status::kPass, std::move(d)}; }
Verdict fail(std::string d) { return {Status::kFail, std::move(d)}; }
Verdict skip(std::string d) { return {Status::kSkip, std::move(d)}; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qdrag-acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QDRAG_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<std::string> ids_of(const std::vector<ScoredCandidate>& cs) {
  std::vector<std::string> out;
  for (const auto& c : cs) out.push_back(c.chunk_id);
  return out;
}

std::vector<double> scores_of(const std::vector<ScoredCandidate>& cs) {
  std::vector<double> out;
  for (const auto& c : cs) out.push_back(c.retrieval_score);
  return out;
}

double recall(const std::vector<ScoredCandidate>& final, const std::set<std::string>& gold) {
  std::size_t found = 0;
  for (const auto& c : final) found += gold.contains(c.chunk_id) ? 1 : 0;
  return gold.empty() ? 0.0 : static_cast<double>(found) / static_cast<double>(gold.size());
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

// ---------------------------------------------------------------------------

Verdict metric_oracle_equivalence() {
  std::mt19937_64 rng(2024);
  constexpr int kLists = 1000;
  for (int trial = 0; trial < kLists; ++trial) {
    const std::size_t universe = 60;
    std::vector<std::string> all;
    for (std::size_t i = 0; i < universe; ++i) all.push_back("c" + std::to_string(i));
    std::shuffle(all.begin(), all.end(), rng);
    const std::size_t len = rng() % 51;
    std::vector<std::string> ranked(all.begin(), all.begin() + static_cast<long>(len));
    std::set<std::string> gold;
    const std::size_t n_gold = rng() % 21;
    while (gold.size() < n_gold) gold.insert(all[rng() % universe]);
    const RankedResult r{"q", ranked, gold};
    for (std::size_t k : {1u, 4u, 10u}) {
      if (hits_at_k(r, k) != oracle::hits(ranked, gold, k)) {
        return fail("hits@" + std::to_string(k) + " differs on list " + std::to_string(trial));
      }
    }
    if (std::abs(mrr_at_10(r) - oracle::mrr10(ranked, gold)) > 1e-12) {
      return fail("mrr@10 differs on list " + std::to_string(trial));
    }
    if (std::abs(map_at_10(r) - oracle::map10(ranked, gold)) > 1e-12) {
      return fail("map@10 differs on list " + std::to_string(trial));
    }
  }
  return pass(std::to_string(kLists) + " lists, tol 1e-12");
}

Verdict exact_search_equivalence() {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> g;
  const std::size_t n = 1000, dim = 32;
  std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
  VectorIndex index(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& x : rows[i]) x = g(rng);
    index.add("c" + std::to_string(i), EmbeddingVector(rows[i]));
  }
  for (int q = 0; q < 50; ++q) {
    std::vector<double> query(dim);
    for (double& x : query) x = g(rng);
    for (std::size_t k : {1u, 4u, 10u}) {
      const auto got = index.search(EmbeddingVector(query), k);
      const auto want = oracle::full_sort_topk(rows, query, k);
      if (got.size() != want.size()) return fail("size mismatch");
      for (std::size_t i = 0; i < want.size(); ++i) {
        if (got[i].position != want[i]) {
          return fail("query " + std::to_string(q) + " k=" + std::to_string(k) + " rank " +
                      std::to_string(i));
        }
      }
    }
  }
  return pass("1000 x dim 32, 50 queries, k in {1,4,10}");
}

Verdict reduction_laws() {
  const SyntheticSuite s = make_synthetic_multihop(50, 100, 7);
  const std::vector<Chunk> chunks = chunk_corpus(s.documents, ChunkPolicy::fixed_window(256, 0));
  HashEmbedder embedder(1024, 7);
  const VectorIndex index = build_index(chunks, embedder);
  const ChunkStore store(chunks);
  InnerProductScorer identity(embedder);
  ScriptedChat empty_decomposer({}, std::string("none"));
  Decomposer decomposer(empty_decomposer, DecomposePrompt(), SamplingParams{});
  const VirtualClock clock;
  RetrievalContext ctx{index, store, embedder, &identity, clock, 10};
  for (const QAExample& ex : s.examples) {
    const QueryBundle b = decomposer.run(ex.query_id, ex.question);
    if (!b.sub_queries.empty()) return fail(ex.query_id + ": decomposer was not empty");
    const RetrievalOutcome naive = retrieve_naive(ex.question, ctx);
    for (SystemVariant v : {SystemVariant::kQd, SystemVariant::kQdRr}) {
      const RetrievalOutcome out = retrieve(v, b, ctx);
      if (ids_of(out.final) != ids_of(naive.final) ||
          scores_of(out.final) != scores_of(naive.final)) {
        return fail(ex.query_id + ": " + std::string(to_string(v)) + " differs from naive");
      }
    }
  }
  return pass("100 queries, qd and qd_rr equal naive exactly");
}

Verdict structural_laws() {
  testing::RandomWorld w(200, 8, 60, 404);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  std::size_t checks = 0;
  for (int run = 0; run < 1000; ++run) {
    const std::size_t k = 1 + rng() % 10;
    QueryBundle b{"r" + std::to_string(run), w.queries[rng() % w.queries.size()], {}, {}};
    const std::size_t n_subs = rng() % 6;
    while (b.sub_queries.size() < n_subs) {
      const std::string& sq = w.queries[rng() % w.queries.size()];
      if (sq != b.original &&
          std::find(b.sub_queries.begin(), b.sub_queries.end(), sq) == b.sub_queries.end()) {
        b.sub_queries.push_back(sq);
      }
    }
    // Gold-aware scores: gold passages score above every non-gold passage.
    std::set<std::string> gold;
    for (std::size_t i = 0, n = 1 + rng() % 4; i < n; ++i) gold.insert("c" + std::to_string(rng() % 200));
    testing::TableScorer gold_aware;
    for (const Chunk& c : w.chunks) {
      gold_aware.table[encoder_text(c)] = gold.contains(c.chunk_id) ? 1.0 + u(rng) : u(rng);
    }
    RetrievalContext ctx{w.index, w.store, w.embedder, &gold_aware, VirtualClock(), k};

    std::map<SystemVariant, RetrievalOutcome> outs;
    for (SystemVariant v : kAllVariants) {
      const RetrievalOutcome out = retrieve(v, b, ctx);
      const std::string tag = "run " + std::to_string(run) + " " + std::string(to_string(v));
      if (out.final.size() > k) return fail(tag + ": |final| > k");
      std::set<std::string> allowed;
      const std::vector<std::string> qs =
          uses_decomposition(v) ? query_set(b) : std::vector<std::string>{b.original};
      const std::size_t depth = v == SystemVariant::kRr ? 2 * k : k;
      for (const std::string& q : qs) {
        for (const auto& c : w.index.search(w.embedder.embed(q), depth)) allowed.insert(c.chunk_id);
      }
      std::set<std::string> seen;
      for (const auto& c : out.final) {
        if (!seen.insert(c.chunk_id).second) return fail(tag + ": duplicate " + c.chunk_id);
        if (!allowed.contains(c.chunk_id)) return fail(tag + ": " + c.chunk_id + " not retrieved");
      }
      if (uses_reranker(v)) {
        for (std::size_t i = 1; i < out.final.size(); ++i) {
          if (*out.final[i - 1].rerank_score < *out.final[i].rerank_score) {
            return fail(tag + ": rerank scores increase");
          }
        }
      }
      outs[v] = out;
      ++checks;
    }
    // The qd_rr pool contains the naive pool, and gold-aware selection is exact.
    if (recall(outs[SystemVariant::kQdRr].final, gold) + 1e-12 <
        recall(outs[SystemVariant::kNaive].final, gold)) {
      return fail("run " + std::to_string(run) + ": qd_rr recall below naive");
    }
  }
  return pass("1000 runs, " + std::to_string(checks) + " variant outcomes");
}

Verdict synthetic_suite() {
  RunConfig c;
  c.dataset = Dataset::kSynthetic;
  c.synthetic_entities = 50;
  c.synthetic_queries = 200;
  c.seed = 7;
  c.k = 2;
  c.variants = {kAllVariants.begin(), kAllVariants.end()};
  c.out_dir = scratch("synthetic");
  const RunResult r = run_experiment(c);
  if (r.exit_code() != 0) return fail(std::to_string(r.failures.size()) + " query failures");
  std::map<std::string, double> cover;
  std::map<std::string, std::size_t> n;
  for (const TraceRecord& t : r.traces) {
    cover[t.variant] += oracle::hits(t.final_ids, {t.gold_chunk_ids.begin(), t.gold_chunk_ids.end()}, 10);
    ++n[t.variant];
  }
  for (auto& [v, total] : cover) total /= static_cast<double>(n[v]);
  const double naive = cover["naive"], qd = cover["qd"], rr = cover["rr"], qdrr = cover["qd_rr"];
  const std::string detail = "Hits@10 naive=" + fmt3(naive) + " qd=" + fmt3(qd) + " rr=" +
                             fmt3(rr) + " qd_rr=" + fmt3(qdrr);
  if (n["qd_rr"] != 200) return fail("expected 200 queries per variant; " + detail);
  if (!(qdrr >= qd && qd >= naive && qdrr >= rr)) return fail("ordering violated: " + detail);
  if (qdrr != 1.0) return fail("qd_rr coverage below 1: " + detail);
  return pass(detail);
}

Verdict answer_fixtures() {
  const PrfScores vg = answer_scores({"q", "Vincent van Gogh", "van Gogh", {}, {}});
  if (std::abs(vg.f1 - 0.8) > 1e-12) return fail("van Gogh F1 = " + std::to_string(vg.f1));
  if (normalize_answer("The Eiffel Tower.") != normalize_answer("eiffel tower") ||
      answer_scores({"q", "The Eiffel Tower.", "eiffel tower", {}, {}}).em != 1.0) {
    return fail("Eiffel Tower normalization");
  }
  AnswerJudgment j{"q", "Vincent van Gogh", "van Gogh", {{"A", 0}, {"B", 2}, {"C", 1}}, {{"A", 0}, {"B", 2}}};
  const PrfScores ans = answer_scores(j);
  const PrfScores sp = sp_scores(j);
  if (joint_scores(ans, sp).precision != ans.precision * sp.precision) return fail("joint precision");

  const std::vector<std::string> vocab = {"the", "red", "Blue", "blue.", "a", "green", "an", "Red,"};
  std::mt19937_64 rng(1000);
  for (int trial = 0; trial < 1000; ++trial) {
    std::string pred, gold;
    for (std::size_t i = 0, m = rng() % 7; i < m; ++i) pred += vocab[rng() % vocab.size()] + " ";
    for (std::size_t i = 0, m = rng() % 7; i < m; ++i) gold += vocab[rng() % vocab.size()] + " ";
    const PrfScores s = answer_scores({"q", pred, gold, {}, {}});
    const auto toks = [](const std::string& x) {
      const std::string normalized = normalize_answer(x);
      std::vector<std::string> out;
      for (std::string_view t : text::split_whitespace(normalized)) out.emplace_back(t);
      return out;
    };
    const oracle::Prf o = oracle::multiset_overlap(toks(pred), toks(gold));
    if (std::abs(s.precision - o.p) > 1e-12 || std::abs(s.recall - o.r) > 1e-12 ||
        std::abs(s.f1 - o.f1) > 1e-12) {
      return fail("judgment " + std::to_string(trial) + ": '" + pred + "' vs '" + gold + "'");
    }
  }
  return pass("fixtures exact, 1000 random judgments within 1e-12");
}

Verdict correlation_kernels() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + rng() % 100;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = g(rng);
      y[i] = 0.3 * x[i] + g(rng);
    }
    const Correlation p = pearson(x, y);
    if (!p.defined || std::abs(p.coefficient - oracle::pearson(x, y)) > 1e-9 ||
        std::abs(p.p_value - oracle::pearson_p(p.coefficient, n)) > 1e-9) {
      return fail("pearson series " + std::to_string(trial));
    }
    if (std::abs(spearman(x, y).coefficient - oracle::spearman_no_ties(x, y)) > 1e-9) {
      return fail("spearman series " + std::to_string(trial));
    }
  }
  const std::vector<double> flat = {4, 4, 4, 4};
  const std::vector<double> ramp = {1, 2, 3, 4};
  if (pearson(flat, ramp).defined || spearman(ramp, flat).defined) return fail("zero variance");
  const std::vector<double> xs = {1, 2, 3};
  const std::vector<double> ys = {2, 4, 6};
  if (pearson(xs, ys).coefficient != 1.0) return fail("[1,2,3] vs [2,4,6] not exactly 1");
  return pass("1000 series within 1e-9");
}

Verdict cache_effectiveness() {
  const fs::path dir = scratch("cache");
  const std::string common = "run --mock --dataset synthetic --variant qd_rr --limit 100 --cache " +
                             (dir / "subqueries.jsonl").string();
  if (run_cli(common + " --out " + (dir / "first").string()) != 0 ||
      run_cli(common + " --out " + (dir / "second").string()) != 0) {
    return fail("qdrag run exited non-zero");
  }
  const json a = read_json_file(dir / "first" / "report.json");
  const json b = read_json_file(dir / "second" / "report.json");
  const auto calls_a = a["provider_calls"]["decompose"].get<std::size_t>();
  const auto calls_b = b["provider_calls"]["decompose"].get<std::size_t>();
  const auto ta = read_traces(dir / "first" / "traces.jsonl");
  const auto tb = read_traces(dir / "second" / "traces.jsonl");
  if (ta.size() != 100 || tb.size() != 100) return fail("expected 100 traces per run");
  for (std::size_t i = 0; i < ta.size(); ++i) {
    const StageTimings& x = ta[i].timing;
    const StageTimings& y = tb[i].timing;
    if (ta[i].final_ids != tb[i].final_ids || ta[i].final_scores != tb[i].final_scores ||
        ta[i].sub_queries != tb[i].sub_queries || x.embed != y.embed || x.search != y.search ||
        x.rerank != y.rerank) {
      return fail(ta[i].query_id + ": retrieval differs between runs");
    }
  }
  const std::string detail =
      "decomposer calls (" + std::to_string(calls_a) + ", " + std::to_string(calls_b) + ")";
  if (calls_a != 100 || calls_b != 0) return fail(detail);
  return pass(detail + ", identical retrieval outputs");
}

Verdict determinism() {
  const fs::path dir = scratch("determinism");
  const std::string args = "run --mock --dataset synthetic --variant all --seed 7 --out ";
  if (run_cli(args + (dir / "a").string()) != 0 || run_cli(args + (dir / "b").string()) != 0) {
    return fail("qdrag run exited non-zero");
  }
  for (const char* f : {"traces.jsonl", "report.json", "report.txt", "metrics.jsonl", "failures.json"}) {
    if (read_file(dir / "a" / f) != read_file(dir / "b" / f)) return fail(std::string(f) + " differs");
  }
  return pass("traces, reports and metrics byte-identical");
}

// Opt-in: QDRAG_LIVE_CONFIG names a config file with live provider endpoints and
// MultiHop-RAG corpus/queries paths.
Verdict live_shape_check() {
  const char* cfg = std::getenv("QDRAG_LIVE_CONFIG");
  if (cfg == nullptr || *cfg == '\0') return skip("set QDRAG_LIVE_CONFIG to run");
  const fs::path dir = scratch("live");
  if (run_cli(std::string("run --dataset multihop_rag --variant naive,qd --limit 25 --config ") +
              cfg + " --out " + dir.string()) != 0) {
    return fail("qdrag run exited non-zero");
  }
  const json r = read_json_file(dir / "report.json");
  const double naive = r["timing"]["naive"]["per_query_s"].get<double>();
  const double qd = r["timing"]["qd"]["per_query_s"].get<double>();
  const std::string detail = "per-query naive=" + fmt3(naive) + "s qd=" + fmt3(qd) + "s";
  return qd > naive ? pass(detail) : fail(detail);
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  struct Criterion {
    const char* name;
    double limit_s;  // 0: no runtime bound
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria = {
      {"metric oracle equivalence", 5.0, metric_oracle_equivalence},
      {"exact search equivalence", 5.0, exact_search_equivalence},
      {"reduction laws", 0.0, reduction_laws},
      {"pipeline structural laws", 0.0, structural_laws},
      {"synthetic multi-hop suite", 30.0, synthetic_suite},
      {"answer metric fixtures", 0.0, answer_fixtures},
      {"correlation kernels", 0.0, correlation_kernels},
      {"sub-query cache effectiveness", 0.0, cache_effectiveness},
      {"determinism", 0.0, determinism},
      {"live model shape check", 0.0, live_shape_check},
  };
  int failed = 0, passed = 0, skipped = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = fail(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (v.status == Status::kPass && c.limit_s > 0.0 && secs >= c.limit_s) {
      v = fail("took " + std::to_string(secs) + " s, limit " + std::to_string(c.limit_s) + " s");
    }
    const char* tag = v.status == Status::kPass ? "PASS" : v.status == Status::kFail ? "FAIL" : "SKIP";
    std::printf("[%s] %2zu %-32s %7.2fs  %s\n", tag, i + 1, c.name, secs, v.detail.c_str());
    std::fflush(stdout);
    (v.status == Status::kPass ? passed : v.status == Status::kFail ? failed : skipped) += 1;
  }
  std::printf("%d passed, %d failed, %d skipped\n", passed, failed, skipped);
  return failed == 0 ? 0 : 1;
}
