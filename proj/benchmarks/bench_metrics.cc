#include <random>

#include <benchmark/benchmark.h>

#include "qdrag/metrics.h"

namespace {

void BM_RankMetrics(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<qdrag::RankedResult> results;
  for (int i = 0; i < 1000; ++i) {
    qdrag::RankedResult r;
    for (int j = 0; j < 10; ++j) r.ranked.push_back("c" + std::to_string(rng() % 100));
    for (int j = 0; j < 3; ++j) r.gold.insert("c" + std::to_string(rng() % 100));
    results.push_back(std::move(r));
  }
  for (auto _ : state) {
    double sum = 0.0;
    for (const auto& r : results) sum += qdrag::hits_at_k(r, 10) + qdrag::map_at_10(r) + qdrag::mrr_at_10(r);
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_RankMetrics);

void BM_AnswerF1(benchmark::State& state) {
  const qdrag::AnswerJudgment j{"q", "The Chief of Protocol of the United States",
                                "Chief of Protocol", {}, {}};
  for (auto _ : state) benchmark::DoNotOptimize(qdrag::answer_scores(j));
}
BENCHMARK(BM_AnswerF1);

void BM_Spearman(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::vector<double> x(2500), y(2500);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<double>(rng() % 6);
    y[i] = static_cast<double>(rng() % 5);
  }
  for (auto _ : state) benchmark::DoNotOptimize(qdrag::spearman(x, y));
}
BENCHMARK(BM_Spearman);

}  // namespace
