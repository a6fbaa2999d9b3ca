#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "capforge/pool.hpp"
#include "capforge/poolgen.hpp"
#include "capforge/scoring.hpp"

namespace {

void BM_Cosine(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<float> nd;
  std::vector<float> u(dim), v(dim);
  for (auto& x : u) x = nd(rng);
  for (auto& x : v) x = nd(rng);
  for (auto _ : state) benchmark::DoNotOptimize(capforge::cosine(u, v));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Cosine)->Arg(64)->Arg(512);

void BM_ScorePool(benchmark::State& state) {
  const auto dir = std::filesystem::temp_directory_path() / "capforge-bench-score";
  capforge::GenConfig cfg;
  cfg.num_records = 20000;
  capforge::generate_pool(cfg, dir);
  const auto handle = capforge::open_pool(dir);
  const auto workers = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(capforge::score_pool(handle, "raw", workers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(handle.size()));
  std::filesystem::remove_all(dir);
}
BENCHMARK(BM_ScorePool)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
