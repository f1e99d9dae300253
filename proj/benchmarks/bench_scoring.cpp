#include <benchmark/benchmark.h>

#include "precocity/random.hpp"
#include "precocity/scoring.hpp"

using namespace precocity;

namespace {

FeatureStore make_store(std::size_t n, std::size_t k) {
  Rng rng(3);
  FeatureStore store(FeatureKind::topic_simplex);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(k);
    double s = 0.0;
    for (auto& x : v) s += (x = uniform01(rng) + 1e-3);
    for (auto& x : v) x /= s;
    store.add("c" + std::to_string(i), "d" + std::to_string(i / 4), 1900 + static_cast<int>(i % 60), v);
  }
  return store;
}

void BM_ScoreCorpus(benchmark::State& state) {
  const auto store = make_store(static_cast<std::size_t>(state.range(0)), 50);
  const WindowConfig window{20, 20, 1900, 1959, false};
  ScoringOptions opts;
  opts.min_comparisons = 1;
  opts.threads = 1;
  const ExclusionSet none;
  for (auto _ : state) benchmark::DoNotOptimize(score_corpus(store, none, window, opts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreCorpus)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace
