#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "capforge/curation.hpp"

namespace {

void BM_TopFraction(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::normal_distribution<float> nd(0.21f, 0.05f);
  std::vector<float> scores(n);
  for (auto& s : scores) s = nd(rng);
  std::vector<capforge::RecordId> ids(n);
  std::iota(ids.begin(), ids.end(), capforge::RecordId{0});
  for (auto _ : state) benchmark::DoNotOptimize(capforge::top_fraction(scores, ids, 30.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TopFraction)->Arg(10000)->Arg(1000000)->Unit(benchmark::kMillisecond);

void BM_ThresholdFilter(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<float> nd(0.25f, 0.05f);
  std::vector<float> scores(n);
  for (auto& s : scores) s = nd(rng);
  for (auto _ : state) benchmark::DoNotOptimize(capforge::threshold_filter(scores, 0.28));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ThresholdFilter)->Arg(1000000)->Unit(benchmark::kMillisecond);

}  // namespace
