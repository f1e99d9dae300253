#include <benchmark/benchmark.h>

#include "precocity/random.hpp"
#include "precocity/topic_model.hpp"

using namespace precocity;

namespace {

std::vector<Chunk> make_chunks(std::size_t n, std::size_t len, int vocab) {
  Rng rng(4);
  std::vector<Chunk> chunks(n);
  for (std::size_t i = 0; i < n; ++i) {
    chunks[i].chunk_id = "c" + std::to_string(i);
    chunks[i].doc_id = "d" + std::to_string(i);
    chunks[i].year = 1900;
    for (std::size_t t = 0; t < len; ++t)
      chunks[i].tokens.push_back("w" + std::to_string(uniform_index(rng, static_cast<std::uint64_t>(vocab))));
    chunks[i].sentence_spans.emplace_back(0, len);
  }
  return chunks;
}

void BM_GibbsSweep(benchmark::State& state) {
  const auto chunks = make_chunks(200, 512, 2000);
  LdaOptions opts;
  opts.num_topics = static_cast<int>(state.range(0));
  opts.iterations = 1;
  VocabularyOptions vocab;
  vocab.min_chunk_frequency = 1;
  vocab.stoplist.clear();
  auto model = train_topic_model(chunks, opts, vocab);
  std::uint64_t seed = 1;
  for (auto _ : state) gibbs_sweep(model, 1, seed++);
  state.SetItemsProcessed(state.iterations() * 200 * 512);
}
BENCHMARK(BM_GibbsSweep)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
