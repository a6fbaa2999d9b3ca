#include <benchmark/benchmark.h>

#include "capforge/poolgen.hpp"
#include "capforge/text_metrics.hpp"

namespace {

std::vector<std::string> captions(std::size_t n) {
  capforge::GenConfig cfg;
  cfg.num_records = n;
  std::vector<std::string> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(capforge::generate_record(cfg, i).record.raw_caption);
  return out;
}

void BM_Tokenize(benchmark::State& state) {
  const auto caps = captions(1000);
  for (auto _ : state)
    for (const auto& c : caps) benchmark::DoNotOptimize(capforge::tokenize(c));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Tokenize);

void BM_UniqueTrigrams(benchmark::State& state) {
  const auto caps = captions(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(capforge::unique_trigrams(caps));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_UniqueTrigrams)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace
