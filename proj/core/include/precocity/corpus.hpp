#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace precocity {

struct DocumentRecord {
  std::string doc_id;
  int year = 0;
  std::vector<std::string> author_ids;
  std::string text;
  std::optional<long long> citation_count;
  std::optional<int> author_birth_year;
  std::vector<std::string> group_tags;
  std::optional<bool> discussed_flag;
};

// A contiguous, sentence-bounded run of tokens from one document.
struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  int seq = 0;
  int year = 0;
  std::vector<std::string> tokens;
  // [begin, end) token offsets of each sentence within `tokens`.
  std::vector<std::pair<std::size_t, std::size_t>> sentence_spans;
  // Source text covered by the chunk's sentences (quote detection needs the
  // punctuation that tokenization drops).
  std::string text;

  std::size_t token_count() const { return tokens.size(); }
};

// Maps JSONL keys onto DocumentRecord fields. Only id, year and text are
// required in every record.
struct CorpusSchema {
  std::string doc_id = "doc_id";
  std::string year = "year";
  std::string text = "text";
  std::string author_ids = "author_ids";
  std::string citation_count = "citation_count";
  std::string author_birth_year = "author_birth_year";
  std::string group_tags = "group_tags";
  std::string discussed_flag = "discussed_flag";
  std::optional<int> min_year;
  std::optional<int> max_year;
};

// Reads one JSON document per line. Throws DataError naming the line and
// field for malformed records and for duplicate ids.
std::vector<DocumentRecord> ingest_corpus(const std::filesystem::path& path,
                                          const CorpusSchema& schema = {});
std::vector<DocumentRecord> parse_corpus(std::string_view jsonl,
                                         const CorpusSchema& schema = {});

void write_corpus_jsonl(const std::filesystem::path& path,
                        std::span<const DocumentRecord> docs);
std::string corpus_to_jsonl(std::span<const DocumentRecord> docs);

// Drops the first and last floor(fraction * n_tokens) tokens; the returned
// text is the source substring spanning the retained tokens.
DocumentRecord trim_paratext(const DocumentRecord& doc, double fraction = 0.0);

inline constexpr std::size_t kEmbeddingChunkTokens = 512;
inline constexpr std::size_t kTopicChunkTokens = 512;

// Greedy sentence packing up to max_tokens per chunk. A sentence longer than
// max_tokens becomes its own chunk, truncated to max_tokens.
std::vector<Chunk> chunk_embedding_granularity(const DocumentRecord& doc,
                                               std::size_t max_tokens = kEmbeddingChunkTokens);

// Joins consecutive embedding chunks until each reaches min_tokens. A short
// remainder is folded into the previous topic chunk when one exists.
std::vector<Chunk> chunk_topic_granularity(std::span<const Chunk> embedding_chunks,
                                           std::size_t min_tokens = kTopicChunkTokens);

std::string embedding_chunk_id(const std::string& doc_id, int seq);
std::string topic_chunk_id(const std::string& doc_id, int seq);

// Chunk tables. JSONL carries everything needed to rebuild a Chunk (the
// feature adapter reads `text`); CSV is the flat summary.
void write_chunks_jsonl(const std::filesystem::path& path, std::span<const Chunk> chunks);
std::vector<Chunk> read_chunks_jsonl(const std::filesystem::path& path);
void write_chunks_csv(const std::filesystem::path& path, std::span<const Chunk> chunks);

}  // namespace precocity
