#include <benchmark/benchmark.h>

#include <random>

#include "llmconf/kernels.hpp"

namespace {

struct Data {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

Data make_data(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  Data d;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = rng() % 5 < 2;
    d.labels.push_back(pos);
    d.scores.push_back(z(rng) + (pos ? 0.7 : 0.0));
  }
  return d;
}

void BM_BootstrapSerial(benchmark::State& state) {
  const auto d = make_data(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(llmconf::kernels::bootstrap_auc_serial(d.scores, d.labels, 1000, 42));
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}

void BM_BootstrapParallel(benchmark::State& state) {
  const auto d = make_data(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        llmconf::kernels::bootstrap_auc_parallel(d.scores, d.labels, 1000, 42));
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}

}  // namespace

BENCHMARK(BM_BootstrapSerial)->Arg(191)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BootstrapParallel)->Arg(191)->Arg(2000)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
