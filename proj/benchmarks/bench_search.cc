#include <random>

#include <benchmark/benchmark.h>

#include "qdrag/embedding.h"
#include "qdrag/vector_index.h"

namespace {

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g;
  std::vector<double> v(dim);
  double s = 0.0;
  for (double& x : v) {
    x = g(rng);
    s += x * x;
  }
  for (double& x : v) x /= std::sqrt(s);
  return v;
}

void BM_FlatSearch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(1);
  qdrag::VectorIndex index(dim);
  for (std::size_t i = 0; i < n; ++i) {
    index.add("c" + std::to_string(i), qdrag::EmbeddingVector(random_unit(rng, dim)));
  }
  const qdrag::EmbeddingVector q(random_unit(rng, dim));
  for (auto _ : state) benchmark::DoNotOptimize(index.search(q, 10));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_FlatSearch)->Args({1000, 1024})->Args({10000, 1024})->Args({10000, 128});

}  // namespace
