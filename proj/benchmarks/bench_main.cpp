#include <benchmark/benchmark.h>

#include "wldecode/rng.hpp"

static void BM_RngNormal(benchmark::State& state) {
  wld::Rng rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rng.normal());
  }
}
BENCHMARK(BM_RngNormal);

BENCHMARK_MAIN();
