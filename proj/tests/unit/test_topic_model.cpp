#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "precocity/error.hpp"
#include "precocity/topic_model.hpp"

using namespace precocity;

namespace {

Chunk make_chunk(std::string id, std::vector<std::string> tokens) {
  Chunk c;
  c.chunk_id = std::move(id);
  c.doc_id = c.chunk_id;
  c.year = 1950;
  c.tokens = std::move(tokens);
  c.sentence_spans = {{0, c.tokens.size()}};
  return c;
}

std::vector<std::string> cycle(const std::vector<std::string>& words, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(words[i % words.size()]);
  return out;
}

VocabularyOptions permissive() {
  VocabularyOptions v;
  v.min_chunk_frequency = 1;
  v.stoplist = {};
  return v;
}

// Chunks mixing four disjoint word groups with random proportions.
std::vector<Chunk> mixed_corpus(std::size_t n_chunks, std::size_t len, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Chunk> out;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    const auto major = uniform_index(rng, 4);
    std::vector<std::string> toks;
    for (std::size_t i = 0; i < len; ++i) {
      const auto g = uniform01(rng) < 0.8 ? major : uniform_index(rng, 4);
      toks.push_back("g" + std::to_string(g) + "w" + std::to_string(uniform_index(rng, 10)));
    }
    out.push_back(make_chunk("c" + std::to_string(c), std::move(toks)));
  }
  return out;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace

TEST(Subsample, QuotaPerYear) {
  std::vector<DocumentRecord> docs;
  for (int i = 0; i < 10; ++i) docs.push_back(fixtures::doc("a" + std::to_string(i), 1950, "x"));
  for (int i = 0; i < 3; ++i) docs.push_back(fixtures::doc("b" + std::to_string(i), 1951, "x"));
  const auto s = balanced_subsample(docs, 5, 1);
  EXPECT_EQ(std::count_if(s.begin(), s.end(), [](const auto& d) { return d.year == 1950; }), 5);
  EXPECT_EQ(std::count_if(s.begin(), s.end(), [](const auto& d) { return d.year == 1951; }), 3);
}

TEST(Subsample, IdentityAndDeterminism) {
  std::vector<DocumentRecord> docs;
  for (int i = 0; i < 12; ++i) docs.push_back(fixtures::doc("d" + std::to_string(i), 1950 + i % 3, "x"));
  const auto all = balanced_subsample(docs, 100, 3);
  ASSERT_EQ(all.size(), docs.size());
  auto ids = [](const std::vector<DocumentRecord>& v) {
    std::vector<std::string> out;
    for (const auto& d : v) out.push_back(d.doc_id);
    return out;
  };
  EXPECT_EQ(ids(balanced_subsample(docs, 2, 9)), ids(balanced_subsample(docs, 2, 9)));
  EXPECT_THROW(balanced_subsample(std::vector<DocumentRecord>{}, 2, 1), DataError);
}

TEST(Vocabulary, PrunesRareAndStopwords) {
  std::vector<Chunk> chunks{make_chunk("a", {"The", "cat", "sat"}), make_chunk("b", {"the", "Cat", "ran"})};
  VocabularyOptions opts;
  opts.min_chunk_frequency = 2;
  const auto v = build_vocabulary(chunks, opts);
  EXPECT_EQ(v.words(), (std::vector<std::string>{"cat"}));
}

TEST(Lda, DisjointVocabulariesSeparate) {
  std::vector<Chunk> chunks{make_chunk("d1", cycle({"a", "b", "c"}, 60)), make_chunk("d2", cycle({"x", "y", "z"}, 60))};
  LdaOptions opts;
  opts.num_topics = 2;
  opts.iterations = 200;
  opts.seed = 42;
  const auto state = train_topic_model(chunks, opts, permissive());
  std::vector<std::size_t> dominant;
  for (const auto& c : chunks) {
    const auto r = infer(state, c, {100, 50, 5});
    const auto& p = r.distribution.probs;
    const auto it = std::max_element(p.begin(), p.end());
    EXPECT_GT(*it, 0.9);
    dominant.push_back(static_cast<std::size_t>(it - p.begin()));
  }
  EXPECT_NE(dominant[0], dominant[1]);
}

TEST(Lda, SingleTopicIsDegenerate) {
  const auto chunks = mixed_corpus(6, 40, 1);
  LdaOptions opts;
  opts.num_topics = 1;
  opts.iterations = 5;
  const auto state = train_topic_model(chunks, opts, permissive());
  for (std::size_t d = 0; d < chunks.size(); ++d) {
    EXPECT_EQ(state.training_distribution(d).probs, std::vector<double>{1.0});
    EXPECT_EQ(infer(state, chunks[d], {10, 5, 1}).distribution.probs, std::vector<double>{1.0});
  }
}

TEST(Lda, CountsMatchAssignments) {
  const auto chunks = mixed_corpus(20, 80, 2);
  LdaOptions opts;
  opts.num_topics = 4;
  opts.iterations = 20;
  const auto state = train_topic_model(chunks, opts, permissive());
  EXPECT_NO_THROW(state.check_consistency());
  std::vector<std::int64_t> assigned(4, 0);
  for (const auto& z : state.assignments)
    for (auto k : z) ++assigned[static_cast<std::size_t>(k)];
  for (int k = 0; k < 4; ++k) {
    std::int64_t row = 0;
    for (int w = 0; w < state.vocabulary_size(); ++w) row += state.topic_word(k, w);
    EXPECT_EQ(row, assigned[static_cast<std::size_t>(k)]);
    EXPECT_EQ(row, state.topic_totals[static_cast<std::size_t>(k)]);
  }
}

TEST(Lda, DeterministicAndSaveLoadRoundTrip) {
  const auto chunks = mixed_corpus(10, 50, 3);
  LdaOptions opts;
  opts.num_topics = 3;
  opts.iterations = 10;
  const auto a = train_topic_model(chunks, opts, permissive());
  const auto b = train_topic_model(chunks, opts, permissive());
  EXPECT_EQ(a.assignments, b.assignments);
  fixtures::TempDir dir;
  save_topic_model(a, dir / "m.json");
  const auto c = load_topic_model(dir / "m.json");
  EXPECT_EQ(c.topic_word_counts, a.topic_word_counts);
  EXPECT_EQ(c.vocabulary.words(), a.vocabulary.words());
  EXPECT_NO_THROW(c.check_consistency());
  EXPECT_EQ(infer(c, chunks[0]).distribution.probs, infer(a, chunks[0]).distribution.probs);
}

TEST(Lda, EmptyVocabularyRejected) {
  std::vector<Chunk> chunks{make_chunk("a", {"the", "of"})};
  LdaOptions opts;
  opts.num_topics = 2;
  EXPECT_THROW(train_topic_model(chunks, opts), DataError);
}

TEST(Inference, OutOfVocabularyReturnsUniformWithWarning) {
  const auto chunks = mixed_corpus(6, 40, 4);
  LdaOptions opts;
  opts.num_topics = 4;
  opts.iterations = 5;
  const auto state = train_topic_model(chunks, opts, permissive());
  const auto r = infer(state, make_chunk("oov", {"zzz", "qqq"}));
  EXPECT_TRUE(r.warning.has_value());
  EXPECT_EQ(r.in_vocabulary_tokens, 0u);
  for (double p : r.distribution.probs) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(Inference, TrainingChunkRecoversItsMixture) {
  const auto chunks = mixed_corpus(40, 200, 5);
  LdaOptions opts;
  opts.num_topics = 4;
  opts.alpha_sum = 1.0;
  opts.iterations = 200;
  const auto state = train_topic_model(chunks, opts, permissive());
  for (std::size_t d = 0; d < chunks.size(); ++d) {
    const auto r = infer(state, chunks[d], {100, 50, 11});
    const double sum = std::accumulate(r.distribution.probs.begin(), r.distribution.probs.end(), 0.0);
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_LE(total_variation(r.distribution.probs, state.training_distribution(d).probs), 0.2) << d;
  }
}

TEST(Inference, IndependentOfCallOrder) {
  const auto chunks = mixed_corpus(8, 60, 6);
  LdaOptions opts;
  opts.num_topics = 3;
  opts.iterations = 10;
  const auto state = train_topic_model(chunks, opts, permissive());
  const auto first = infer(state, chunks[3]);
  infer(state, chunks[1]);
  EXPECT_EQ(infer(state, chunks[3]).distribution.probs, first.distribution.probs);
}
