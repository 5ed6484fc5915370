#include <benchmark/benchmark.h>

#include "qdrag/providers.h"

namespace {

const std::string kPassage =
    "Shirley Temple Black was an American actress, singer, dancer, businesswoman, and diplomat. "
    "As an adult, she was named United States ambassador to Ghana and to Czechoslovakia and also "
    "served as Chief of Protocol of the United States.";

void BM_HashEmbedder(benchmark::State& state) {
  qdrag::HashEmbedder embedder(static_cast<std::size_t>(state.range(0)), 7);
  const std::vector<std::string> batch(64, kPassage);
  for (auto _ : state) benchmark::DoNotOptimize(embedder.embed_texts(batch));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_HashEmbedder)->Arg(128)->Arg(1024);

void BM_TokenOverlapScorer(benchmark::State& state) {
  qdrag::TokenOverlapScorer scorer;
  const std::vector<std::string> passages(20, kPassage);
  const std::string query = "What government position was held by Shirley Temple?";
  for (auto _ : state) benchmark::DoNotOptimize(scorer.score_pairs(query, passages));
  state.SetItemsProcessed(state.iterations() * 20);
}
BENCHMARK(BM_TokenOverlapScorer);

}  // namespace
