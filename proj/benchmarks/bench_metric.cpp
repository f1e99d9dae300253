#include <benchmark/benchmark.h>

#include <vector>

#include "precocity/metric.hpp"
#include "precocity/random.hpp"

using namespace precocity;

namespace {

std::vector<double> simplex(Rng& rng, std::size_t k) {
  std::vector<double> v(k);
  double s = 0.0;
  for (auto& x : v) s += (x = uniform01(rng) + 1e-3);
  for (auto& x : v) x /= s;
  return v;
}

void BM_Kl(benchmark::State& state) {
  Rng rng(1);
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto p = simplex(rng, k), q = simplex(rng, k);
  for (auto _ : state) benchmark::DoNotOptimize(kl_divergence(p, q));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Kl)->Arg(20)->Arg(250);

void BM_Cosine(benchmark::State& state) {
  Rng rng(2);
  const auto k = static_cast<std::size_t>(state.range(0));
  std::vector<double> u(k), v(k);
  for (std::size_t i = 0; i < k; ++i) {
    u[i] = uniform01(rng) - 0.5;
    v[i] = uniform01(rng) - 0.5;
  }
  for (auto _ : state) benchmark::DoNotOptimize(cosine_distance(u, v));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Cosine)->Arg(384)->Arg(768);

}  // namespace

BENCHMARK_MAIN();
