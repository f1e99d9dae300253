#include <gtest/gtest.h>

#include <numeric>

#include "fixtures.hpp"
#include "precocity/corpus.hpp"
#include "precocity/error.hpp"
#include "precocity/table_io.hpp"
#include "precocity/tokenizer.hpp"

using namespace precocity;

namespace {

std::size_t total_tokens(const std::vector<Chunk>& chunks) {
  return std::accumulate(chunks.begin(), chunks.end(), std::size_t{0},
                         [](std::size_t a, const Chunk& c) { return a + c.token_count(); });
}

std::vector<std::size_t> sizes(const std::vector<Chunk>& chunks) {
  std::vector<std::size_t> out;
  for (const auto& c : chunks) out.push_back(c.token_count());
  return out;
}

// One sentence per requested size; each embedding chunk then holds one
// sentence when the sizes are packed individually.
std::vector<Chunk> embedding_chunks_of(const std::vector<int>& lengths, std::size_t max_tokens) {
  return chunk_embedding_granularity(fixtures::doc("d", 1950, fixtures::sentences(lengths)), max_tokens);
}

}  // namespace

TEST(Ingest, ThreeValidRecords) {
  const auto docs = parse_corpus(
      R"({"doc_id":"a","year":1950,"text":"One.","author_ids":["x"],"citation_count":3}
{"doc_id":"b","year":"1951","text":"Two.","group_tags":["J"],"discussed_flag":true}
{"doc_id":"c","year":1952,"text":"Three.","author_birth_year":1900}
)");
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].citation_count, 3);
  EXPECT_EQ(docs[1].year, 1951);
  EXPECT_EQ(docs[1].discussed_flag, true);
  EXPECT_EQ(docs[2].author_birth_year, 1900);
  EXPECT_FALSE(docs[2].citation_count.has_value());
}

TEST(Ingest, MissingYearNamesLineAndRecord) {
  try {
    parse_corpus("{\"doc_id\":\"a\",\"year\":1950,\"text\":\"x\"}\n{\"doc_id\":\"bad\",\"text\":\"x\"}\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("year"), std::string::npos) << msg;
    EXPECT_NE(msg.find("bad"), std::string::npos) << msg;
  }
}

TEST(Ingest, DuplicateIdRejected) {
  EXPECT_THROW(parse_corpus("{\"doc_id\":\"a\",\"year\":1,\"text\":\"x\"}\n{\"doc_id\":\"a\",\"year\":2,\"text\":\"y\"}\n"),
               DataError);
}

TEST(Ingest, NegativeCitationsAndOutOfRangeYearRejected) {
  EXPECT_THROW(parse_corpus(R"({"doc_id":"a","year":1950,"text":"x","citation_count":-1})"), DataError);
  CorpusSchema schema;
  schema.min_year = 1960;
  EXPECT_THROW(parse_corpus(R"({"doc_id":"a","year":1950,"text":"x"})", schema), DataError);
}

TEST(Ingest, FieldMappingAndRoundTrip) {
  CorpusSchema schema;
  schema.doc_id = "id";
  schema.year = "date";
  schema.text = "body";
  const auto docs = parse_corpus(R"({"id":"z","date":1999,"body":"Text here."})", schema);
  ASSERT_EQ(docs.size(), 1u);
  EXPECT_EQ(docs[0].doc_id, "z");

  fixtures::TempDir dir;
  auto d = fixtures::doc("q", 1900, "Hello \"there\".", {"a1", "a2"});
  d.citation_count = 4;
  d.group_tags = {"J1"};
  write_corpus_jsonl(dir / "c.jsonl", std::vector<DocumentRecord>{d});
  const auto back = ingest_corpus(dir / "c.jsonl");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].text, d.text);
  EXPECT_EQ(back[0].author_ids, d.author_ids);
  EXPECT_EQ(back[0].citation_count, 4);
  EXPECT_EQ(back[0].group_tags, d.group_tags);
}

TEST(Ingest, MissingFileIsDataError) {
  EXPECT_THROW(ingest_corpus("/nonexistent/corpus.jsonl"), DataError);
}

TEST(TrimParatext, ThousandTokensTenPercent) {
  std::string text;
  for (int i = 0; i < 1000; ++i) text += "t" + std::to_string(i) + " ";
  const auto trimmed = trim_paratext(fixtures::doc("d", 1900, text), 0.10);
  const auto words = word_tokens(trimmed.text);
  ASSERT_EQ(words.size(), 800u);
  EXPECT_EQ(words.front(), "t100");
  EXPECT_EQ(words.back(), "t899");
}

TEST(TrimParatext, ZeroFractionAndFloorBoundary) {
  const auto d = fixtures::doc("d", 1900, "a b c d e f g h i");
  EXPECT_EQ(trim_paratext(d, 0.0).text, d.text);
  EXPECT_EQ(trim_paratext(d, 0.10).text, d.text);
}

TEST(TrimParatext, HalfOrMoreRejected) {
  const auto d = fixtures::doc("d", 1900, "a b");
  EXPECT_THROW(trim_paratext(d, 0.5), ConfigError);
  EXPECT_THROW(trim_paratext(d, -0.1), ConfigError);
}

TEST(EmbeddingChunks, GreedyPacking) {
  const auto chunks = embedding_chunks_of({200, 200, 200}, 512);
  EXPECT_EQ(sizes(chunks), (std::vector<std::size_t>{400, 200}));
  EXPECT_EQ(chunks[0].sentence_spans.size(), 2u);
  EXPECT_EQ(chunks[0].chunk_id, "d#e0");
  EXPECT_EQ(chunks[1].seq, 1);
}

TEST(EmbeddingChunks, OverlongSentenceTruncated) {
  const auto chunks = embedding_chunks_of({600}, 512);
  EXPECT_EQ(sizes(chunks), (std::vector<std::size_t>{512}));
}

TEST(EmbeddingChunks, EmptyText) { EXPECT_TRUE(embedding_chunks_of({}, 512).empty()); }

TEST(EmbeddingChunks, ChunksStartAndEndOnSentences) {
  const auto chunks = embedding_chunks_of({5, 7, 3, 9, 2, 6}, 12);
  for (const auto& c : chunks) {
    ASSERT_FALSE(c.sentence_spans.empty());
    EXPECT_EQ(c.sentence_spans.front().first, 0u);
    EXPECT_EQ(c.sentence_spans.back().second, c.token_count());
    // Chunk text re-tokenizes to the chunk's tokens.
    EXPECT_EQ(word_tokens(c.text), c.tokens);
  }
}

TEST(TopicChunks, HandTracedMerge) {
  const auto emb = embedding_chunks_of({400, 400, 400}, 512);
  ASSERT_EQ(sizes(emb), (std::vector<std::size_t>{400, 400, 400}));
  const auto topic = chunk_topic_granularity(emb);
  EXPECT_EQ(sizes(topic), (std::vector<std::size_t>{1200}));
  EXPECT_EQ(topic[0].chunk_id, "d#t0");
}

TEST(TopicChunks, ExactThresholdAndDegenerateDocument) {
  EXPECT_EQ(sizes(chunk_topic_granularity(embedding_chunks_of({512, 512}, 512))),
            (std::vector<std::size_t>{512, 512}));
  EXPECT_EQ(sizes(chunk_topic_granularity(embedding_chunks_of({300}, 512))), (std::vector<std::size_t>{300}));
  EXPECT_TRUE(chunk_topic_granularity(std::vector<Chunk>{}).empty());
}

TEST(TopicChunks, MixedDocumentsRejected) {
  auto a = embedding_chunks_of({10}, 512);
  auto b = chunk_embedding_granularity(fixtures::doc("other", 1950, fixtures::sentences({10})));
  a.insert(a.end(), b.begin(), b.end());
  EXPECT_THROW(chunk_topic_granularity(a, 100), DataError);
}

TEST(ChunkProperties, TokenConservationAndConcatenation) {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<int> lengths;
    const int n = 1 + static_cast<int>(uniform_index(rng, 40));
    for (int i = 0; i < n; ++i) lengths.push_back(1 + static_cast<int>(uniform_index(rng, 120)));
    const auto d = fixtures::doc("d" + std::to_string(trial), 1950, fixtures::sentences(lengths));
    const auto all = word_tokens(d.text);
    const auto emb = chunk_embedding_granularity(d, 128);
    const auto topic = chunk_topic_granularity(emb, 128);
    EXPECT_EQ(total_tokens(emb), all.size());
    EXPECT_EQ(total_tokens(topic), all.size());
    std::vector<std::string> concat;
    for (const auto& c : topic) {
      EXPECT_EQ(c.doc_id, d.doc_id);
      concat.insert(concat.end(), c.tokens.begin(), c.tokens.end());
    }
    EXPECT_EQ(concat, all);
    for (const auto& c : emb) EXPECT_LE(c.token_count(), 128u);
    for (std::size_t i = 0; i + 1 < topic.size(); ++i) EXPECT_GE(topic[i].token_count(), 128u);
  }
}

TEST(ChunkProperties, DeterministicTables) {
  const auto d = fixtures::doc("d", 1950, fixtures::sentences({30, 40, 50, 60}));
  fixtures::TempDir dir;
  write_chunks_jsonl(dir / "a.jsonl", chunk_embedding_granularity(d, 64));
  write_chunks_jsonl(dir / "b.jsonl", chunk_embedding_granularity(d, 64));
  EXPECT_EQ(read_file(dir / "a.jsonl"), read_file(dir / "b.jsonl"));
}

TEST(ChunkTables, JsonlRoundTripAndCsvHeader) {
  const auto d = fixtures::doc("d,1", 1950, fixtures::sentences({3, 4}));
  const auto chunks = chunk_embedding_granularity(d, 5);
  fixtures::TempDir dir;
  write_chunks_jsonl(dir / "c.jsonl", chunks);
  const auto back = read_chunks_jsonl(dir / "c.jsonl");
  ASSERT_EQ(back.size(), chunks.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].chunk_id, chunks[i].chunk_id);
    EXPECT_EQ(back[i].tokens, chunks[i].tokens);
    EXPECT_EQ(back[i].sentence_spans, chunks[i].sentence_spans);
    EXPECT_EQ(back[i].text, chunks[i].text);
    EXPECT_EQ(back[i].year, 1950);
  }
  write_chunks_csv(dir / "c.csv", chunks);
  const auto t = read_csv(dir / "c.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"chunk_id", "doc_id", "seq", "token_count"}));
  EXPECT_EQ(t.rows[0][1], "d,1");
}
