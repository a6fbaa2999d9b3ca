#include <benchmark/benchmark.h>

#include <random>

#include "capforge/kmeans.hpp"

namespace {

capforge::EmbeddingMatrix clustered_points(std::size_t n, std::uint32_t dim) {
  std::mt19937_64 rng(4);
  std::normal_distribution<float> nd;
  std::vector<std::vector<float>> centres(32, std::vector<float>(dim));
  for (auto& c : centres)
    for (auto& x : c) x = 4.0f * nd(rng);
  capforge::EmbeddingMatrix m("image", dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto p = centres[rng() % centres.size()];
    for (auto& x : p) x += nd(rng);
    m.append_row(p);
  }
  return m;
}

void BM_KMeans(benchmark::State& state) {
  const auto points = clustered_points(static_cast<std::size_t>(state.range(0)), 64);
  const capforge::ClusterParams params{static_cast<std::uint32_t>(state.range(1)), 20, 1e-4, 0};
  for (auto _ : state) benchmark::DoNotOptimize(capforge::kmeans(points, params));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KMeans)->Args({5000, 16})->Args({20000, 64})->Unit(benchmark::kMillisecond);

}  // namespace
