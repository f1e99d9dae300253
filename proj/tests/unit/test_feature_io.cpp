#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "precocity/error.hpp"
#include "precocity/feature_io.hpp"
#include "precocity/ngram_lm.hpp"
#include "precocity/table_io.hpp"

using namespace precocity;

namespace {

// 100 embedding-granularity chunks from 20 five-chunk documents.
std::vector<Chunk> sample_chunks() {
  std::vector<Chunk> out;
  for (int d = 0; d < 20; ++d) {
    auto doc = fixtures::doc("doc" + std::to_string(d), 1960 + d % 12, fixtures::sentences({10, 10, 10, 10, 10}));
    for (auto& c : chunk_embedding_granularity(doc, 10)) out.push_back(std::move(c));
  }
  return out;
}

// Written the way an external exporter would: fixed precision, no escaping.
std::string adapter_embeddings_csv(const std::vector<Chunk>& chunks, std::size_t dim) {
  std::string out = "chunk_id";
  for (std::size_t d = 0; d < dim; ++d) out += ",v" + std::to_string(d);
  out += "\n";
  Rng rng(1);
  for (const auto& c : chunks) {
    out += c.chunk_id;
    for (std::size_t d = 0; d < dim; ++d) {
      char buf[32];
      std::snprintf(buf, sizeof buf, ",%.6f", 2.0 * uniform01(rng) - 1.0);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace

TEST(FeatureIo, AdapterEmbeddingCsvIngestsCleanly) {
  const auto chunks = sample_chunks();
  ASSERT_EQ(chunks.size(), 100u);
  fixtures::TempDir dir;
  write_file(dir / "emb.csv", adapter_embeddings_csv(chunks, 16));
  const auto in = read_embeddings(dir / "emb.csv", chunks);
  EXPECT_EQ(in.store.size(), 100u);
  EXPECT_EQ(in.store.dimension(), 16u);
  EXPECT_TRUE(in.missing_chunk_ids.empty());
  EXPECT_EQ(in.store.doc_id(7), chunks[7].doc_id);
  EXPECT_EQ(in.store.year(7), chunks[7].year);
}

TEST(FeatureIo, EmbeddingCsvRoundTripIsExact) {
  const auto chunks = sample_chunks();
  Rng rng(2);
  FeatureStore store(FeatureKind::embedding);
  for (const auto& c : chunks) {
    std::vector<double> v(5);
    for (auto& x : v) x = uniform01(rng) - 0.5;
    store.add(c.chunk_id, c.doc_id, c.year, v);
  }
  fixtures::TempDir dir;
  write_embeddings_csv(dir / "e.csv", store);
  const auto back = read_embeddings_csv(dir / "e.csv", chunks);
  ASSERT_EQ(back.store.size(), store.size());
  for (std::size_t i = 0; i < store.size(); ++i)
    for (std::size_t d = 0; d < 5; ++d) EXPECT_EQ(back.store.values(i)[d], store.values(i)[d]);
}

TEST(FeatureIo, BinaryRoundTripAndSidecar) {
  const auto chunks = sample_chunks();
  Rng rng(3);
  FeatureStore store(FeatureKind::embedding);
  for (std::size_t i = 0; i < 60; ++i) {
    std::vector<double> v(8);
    for (auto& x : v) x = static_cast<float>(uniform01(rng) - 0.5);
    store.add(chunks[i].chunk_id, chunks[i].doc_id, chunks[i].year, v);
  }
  fixtures::TempDir dir;
  write_embeddings_binary(dir / "e.f32", store, "model-x");
  EXPECT_EQ(std::filesystem::file_size(dir / "e.f32"), 60u * 8u * 4u);
  EXPECT_TRUE(std::filesystem::exists(sidecar_path(dir / "e.f32")));
  const auto back = read_embeddings(dir / "e.f32", chunks);
  EXPECT_EQ(back.model_tag, "model-x");
  EXPECT_EQ(back.missing_chunk_ids.size(), 40u);
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t d = 0; d < 8; ++d) EXPECT_EQ(back.store.values(i)[d], store.values(i)[d]);
}

TEST(FeatureIo, BinaryErrors) {
  const auto chunks = sample_chunks();
  fixtures::TempDir dir;
  write_file(dir / "no_sidecar.f32", std::string(8, '\0'));
  EXPECT_THROW(read_embeddings(dir / "no_sidecar.f32", chunks), DataError);
  FeatureStore store(FeatureKind::embedding);
  store.add(chunks[0].chunk_id, chunks[0].doc_id, chunks[0].year, {1.0, 2.0});
  write_embeddings_binary(dir / "e.f32", store);
  write_file(dir / "e.f32", std::string(4, '\0'));  // truncated
  EXPECT_THROW(read_embeddings(dir / "e.f32", chunks), DataError);
}

TEST(FeatureIo, CsvErrorsNameFileAndLine) {
  const auto chunks = sample_chunks();
  fixtures::TempDir dir;
  write_file(dir / "bad.csv", "chunk_id,v0,v1\n" + chunks[0].chunk_id + ",1,2\nnope,1,2\n");
  try {
    read_embeddings_csv(dir / "bad.csv", chunks);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bad.csv"), std::string::npos) << msg;
    EXPECT_NE(msg.find("3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("nope"), std::string::npos) << msg;
  }
  write_file(dir / "hdr.csv", "id,v0\n");
  EXPECT_THROW(read_embeddings_csv(dir / "hdr.csv", chunks), DataError);
  write_file(dir / "nan.csv", "chunk_id,v0\n" + chunks[0].chunk_id + ",abc\n");
  EXPECT_THROW(read_embeddings_csv(dir / "nan.csv", chunks), DataError);
}

TEST(FeatureIo, TopicDistributionsRoundTrip) {
  const auto chunks = sample_chunks();
  Rng rng(4);
  FeatureStore store(FeatureKind::topic_simplex);
  for (const auto& c : chunks) store.add(c.chunk_id, c.doc_id, c.year, oracle::random_simplex(rng, 6));
  fixtures::TempDir dir;
  write_topic_distributions_csv(dir / "t.csv", store);
  const auto back = read_topic_distributions_csv(dir / "t.csv", chunks);
  ASSERT_EQ(back.store.size(), 100u);
  EXPECT_EQ(back.store.kind(), FeatureKind::topic_simplex);
  EXPECT_EQ(back.store.values(42)[3], store.values(42)[3]);
}

TEST(FeatureIo, AdapterPerplexityExportIngestsCleanly) {
  const auto chunks = sample_chunks();
  std::unordered_set<std::string> known;
  std::string csv = "chunk_id,perplexity_past,perplexity_future,past_range,future_range\n";
  for (const auto& c : chunks) {
    known.insert(c.chunk_id);
    const auto p = perplexity_periods(c.year, PeriodScheme{});
    csv += c.chunk_id + ",120.5,98.25," + std::to_string(p.past.first) + "-" + std::to_string(p.past.last) + "," +
           std::to_string(p.future.first) + "-" + std::to_string(p.future.last) + "\n";
  }
  fixtures::TempDir dir;
  write_file(dir / "p.csv", csv);
  const auto in = ingest_external_perplexities(dir / "p.csv", known);
  EXPECT_EQ(in.records.size(), 100u);
  EXPECT_TRUE(in.rejected.empty());
  // The 1968 bucket's ranges, as the exporter echoes them.
  const auto t = read_csv(dir / "p.csv");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (chunks[r].year == 1968) {
      EXPECT_EQ(t.rows[r][3], "1952-1963");
      EXPECT_EQ(t.rows[r][4], "1976-1987");
    }
  }
}
