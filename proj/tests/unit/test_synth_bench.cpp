#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>
#include <unordered_map>

#include "fixtures.hpp"
#include "precocity/corpus.hpp"
#include "precocity/error.hpp"
#include "precocity/synth_bench.hpp"
#include "precocity/tokenizer.hpp"

using namespace precocity;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.years = {1900, 1919};
  c.docs_per_year = 10;
  c.vocab_size = 400;
  c.k_true = 6;
  c.lead_years = 5;
  c.chunks_per_doc = 4;
  c.sentences_per_chunk = 8;
  c.sentence_length = 16;
  c.innovator_chunk_fraction = 0.5;
  c.drift_rate = 0.05;
  return c;
}

struct Planted {
  std::vector<DocScore> docs;
  double mean_innovator = 0.0;
  double mean_all = 0.0;
};

// Scores the corpus with smoothed word-frequency vectors as its simplex
// representation, which needs no model training.
Planted score_words(const SynthCorpus& corpus, const SynthConfig& cfg, bool reverse) {
  const std::size_t chunk_tokens = static_cast<std::size_t>(cfg.sentences_per_chunk * cfg.sentence_length);
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Chunk> chunks;
  for (const auto& d : corpus.docs) {
    const auto emb = chunk_embedding_granularity(d, chunk_tokens);
    for (auto& c : chunk_topic_granularity(emb, chunk_tokens)) {
      for (const auto& t : c.tokens) index.emplace(lowercase(t), index.size());
      chunks.push_back(std::move(c));
    }
  }
  FeatureStore store(FeatureKind::topic_simplex);
  for (const auto& c : chunks) {
    std::vector<double> v(index.size(), 0.1);
    for (const auto& t : c.tokens) v[index.at(lowercase(t))] += 1.0;
    double s = 0.0;
    for (double x : v) s += x;
    for (double& x : v) x /= s;
    store.add(c.chunk_id, c.doc_id, reverse ? -c.year : c.year, std::move(v));
  }
  WindowConfig w;
  w.past_years = 5;
  w.future_years = 5;
  w.corpus_start = reverse ? -cfg.years.last : cfg.years.first;
  w.corpus_end = reverse ? -cfg.years.first : cfg.years.last;
  ScoringOptions opts;
  opts.min_comparisons = 5;
  const auto cs = score_corpus(store, {}, w, opts);
  Planted out;
  out.docs = aggregate_documents(cs, {1.0, false});
  std::size_t n_innov = 0, n = 0;
  for (const auto& d : out.docs) {
    if (!d.scored) continue;
    out.mean_all += d.precocity;
    ++n;
    if (corpus.truth.docs.at(d.doc_id).is_innovator) {
      out.mean_innovator += d.precocity;
      ++n_innov;
    }
  }
  out.mean_all /= static_cast<double>(n);
  if (n_innov) out.mean_innovator /= static_cast<double>(n_innov);
  return out;
}

}  // namespace

TEST(Synth, ShapeAndMetadata) {
  const auto cfg = small_config();
  const auto corpus = generate(cfg);
  ASSERT_EQ(corpus.docs.size(), 200u);
  EXPECT_EQ(corpus.docs.front().doc_id, "synth-1900-000");
  for (const auto& d : corpus.docs) {
    EXPECT_EQ(word_tokens(d.text).size(), 4u * 8u * 16u);
    EXPECT_TRUE(d.citation_count.has_value());
    EXPECT_TRUE(d.author_birth_year.has_value());
    EXPECT_EQ(d.group_tags.size(), 1u);
    const auto& p = corpus.truth.docs.at(d.doc_id);
    if (p.is_innovator) {
      EXPECT_LE(d.year + cfg.lead_years, cfg.years.last);
      EXPECT_EQ(p.forward_chunk_ids.size(), 2u);
      EXPECT_EQ(p.lead_years, 5);
    } else {
      EXPECT_TRUE(p.forward_chunk_ids.empty());
    }
  }
  // 3 innovators in each of the 15 years with a mixture five years ahead.
  EXPECT_EQ(corpus.truth.innovator_count(), 45u);
}

TEST(Synth, NoInnovatorsMeansNoForwardChunks) {
  auto cfg = small_config();
  cfg.innovator_fraction = 0.0;
  const auto corpus = generate(cfg);
  EXPECT_EQ(corpus.truth.innovator_count(), 0u);
  for (const auto& [id, p] : corpus.truth.docs) EXPECT_TRUE(p.forward_chunk_ids.empty());
}

TEST(Synth, DeterministicPerSeed) {
  const auto cfg = small_config();
  const auto a = generate(cfg), b = generate(cfg);
  EXPECT_EQ(corpus_to_jsonl(a.docs), corpus_to_jsonl(b.docs));
  auto other = cfg;
  other.seed = 2;
  EXPECT_NE(corpus_to_jsonl(generate(other).docs), corpus_to_jsonl(a.docs));
}

TEST(Synth, LeadBeyondRangeRejected) {
  auto cfg = small_config();
  cfg.lead_years = 20;
  EXPECT_THROW(generate(cfg), ConfigError);
  cfg = small_config();
  cfg.innovator_chunk_fraction = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Synth, StationaryCorpusHasNoPrecocity) {
  auto cfg = small_config();
  cfg.drift_rate = 0.0;
  const auto corpus = generate(cfg);
  const auto s = score_words(corpus, cfg, false);
  double mean_novelty = 0.0;
  for (const auto& d : s.docs) mean_novelty += d.novelty / static_cast<double>(s.docs.size());
  EXPECT_LT(std::abs(s.mean_all), 0.01 * mean_novelty);
  EXPECT_LT(std::abs(s.mean_innovator), 0.02 * mean_novelty);
}

TEST(Synth, DriftMakesInnovatorsPrecociousAndReversalNegates) {
  const auto cfg = small_config();
  const auto corpus = generate(cfg);
  const auto fwd = score_words(corpus, cfg, false);
  const auto bwd = score_words(corpus, cfg, true);
  EXPECT_GT(fwd.mean_innovator, fwd.mean_all);
  EXPECT_NEAR(bwd.mean_innovator, -fwd.mean_innovator, 1e-12);
}

TEST(Synth, GroundTruthRoundTrip) {
  const auto corpus = generate(small_config());
  fixtures::TempDir dir;
  write_ground_truth_json(dir / "t.json", corpus.truth);
  const auto back = read_ground_truth_json(dir / "t.json");
  ASSERT_EQ(back.docs.size(), corpus.truth.docs.size());
  for (const auto& [id, p] : corpus.truth.docs) {
    EXPECT_EQ(back.docs.at(id).is_innovator, p.is_innovator);
    EXPECT_EQ(back.docs.at(id).forward_chunk_ids, p.forward_chunk_ids);
  }
}

TEST(Auc, HandCases) {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const bool lab[] = {false, true, false, true};
  EXPECT_DOUBLE_EQ(auc(s, lab), 1.0);
  const bool lab2[] = {true, false, true, false};
  EXPECT_DOUBLE_EQ(auc(s, lab2), 0.0);
  const std::vector<double> ties{1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(auc(ties, lab), 0.5);
  const bool none[] = {false, false, false, false};
  EXPECT_THROW(auc(s, none), DataError);
}

TEST(Auc, ComplementSymmetryAndNull) {
  Rng rng(3);
  std::vector<double> s(400), neg(400);
  auto labels = std::make_unique<bool[]>(400);
  for (std::size_t i = 0; i < 400; ++i) {
    s[i] = uniform01(rng);
    neg[i] = -s[i];
    labels[i] = uniform01(rng) < 0.3;
  }
  const std::span<const bool> l(labels.get(), 400);
  EXPECT_NEAR(auc(s, l) + auc(neg, l), 1.0, 1e-12);
  EXPECT_NEAR(auc(s, l), 0.5, 0.08);
}

TEST(Spearman, Cases) {
  const std::vector<double> a{1, 2, 3, 4}, b{10, 20, 30, 40}, c{4, 3, 2, 1}, k{5, 5, 5, 5};
  EXPECT_NEAR(spearman(a, b), 1.0, 1e-12);
  EXPECT_NEAR(spearman(a, c), -1.0, 1e-12);
  EXPECT_EQ(spearman(a, k), 0.0);
  const std::vector<double> tied{0, 0, 1, 2};
  EXPECT_NEAR(spearman(tied, std::vector<double>{0, 0, 5, 8}), 1.0, 1e-12);
}

TEST(Evaluate, PerfectInvertedAndGain) {
  GroundTruth truth;
  std::vector<DocScore> scores;
  for (int i = 0; i < 20; ++i) {
    const std::string id = "d" + std::to_string(i);
    truth.docs[id] = {i % 4 == 0, i % 4 == 0 ? 8 : 0, {}};
    for (double f : {0.25, 1.0}) {
      DocScore s;
      s.doc_id = id;
      s.scored = true;
      s.fraction = f;
      // Perfect at 0.25; at 1.0 every third innovator is misranked.
      const bool innov = i % 4 == 0;
      s.precocity = f == 0.25 ? (innov ? 8.0 : 0.0) : (innov && i % 3 != 0 ? 8.0 : 0.0);
      scores.push_back(s);
    }
  }
  const auto e = evaluate(scores, truth);
  EXPECT_DOUBLE_EQ(e.auc, 1.0);
  EXPECT_NEAR(e.spearman, 1.0, 1e-12);
  ASSERT_TRUE(e.top_quartile_gain.has_value());
  EXPECT_GT(*e.top_quartile_gain, 0.0);
  EXPECT_EQ(e.n_innovators, 5u);

  for (auto& s : scores) s.precocity = -s.precocity;
  EXPECT_DOUBLE_EQ(evaluate(scores, truth).auc, 0.0);

  GroundTruth empty_truth;
  for (auto& [id, p] : truth.docs) empty_truth.docs[id] = {false, 0, {}};
  EXPECT_THROW(evaluate(scores, empty_truth), DataError);
}
