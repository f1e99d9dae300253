#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "precocity/corpus.hpp"

namespace precocity {

// The citing document names or may quote the cited one.
struct CitationLink {
  std::string citing_doc_id;
  std::string cited_doc_id;
  std::vector<std::string> cited_author_last_names;

  auto operator<=>(const CitationLink&) const = default;
};

struct QuoteExtraction {
  std::vector<std::vector<std::string>> quotes;
  std::vector<std::string> warnings;
};

// Token runs enclosed in matched single or double quotes, straight or
// typographic. Nested quotes contribute only the outermost span; an
// unmatched quote character is skipped with a warning.
QuoteExtraction extract_quotes(std::string_view text);

inline constexpr std::size_t kMinQuotedMatch = 6;

// Precomputed normalized token shingles of a cited document.
class CitedText {
 public:
  explicit CitedText(std::string_view text, std::size_t shingle = kMinQuotedMatch);
  bool contains_run(std::span<const std::string> normalized, std::size_t start) const;
  std::size_t shingle() const { return shingle_; }

 private:
  std::size_t shingle_;
  std::unordered_set<std::string> runs_;
};

// True when the chunk names a cited author (case-insensitive token match) or
// quotes at least six consecutive words that occur verbatim in the cited text.
bool flag_chunk(const Chunk& citing_chunk, const CitedText& cited, const CitationLink& link);
bool flag_chunk(const Chunk& citing_chunk, const DocumentRecord& cited_doc, const CitationLink& link);

// Pairs of chunks that must not be compared. Same-author exclusion covers
// whole documents; quote and name exclusion covers only the flagged chunk of
// the citing document, paired with every chunk of the cited document.
class ExclusionSet {
 public:
  ExclusionSet() = default;

  bool empty() const { return coauthors_.empty() && flagged_.empty(); }
  bool excluded(std::string_view chunk_a, std::string_view chunk_b) const;

  // Documents all of whose chunks are excluded against this chunk.
  std::vector<std::string> excluded_docs(std::string_view chunk_id) const;
  // Chunks elsewhere that were flagged against this document.
  std::vector<std::string> chunks_flagged_against(std::string_view doc_id) const;

  // Explicit pair set, each pair ordered (smaller id first). Intended for
  // inspection and tests; scoring uses the indexed queries above.
  std::set<std::pair<std::string, std::string>> excluded_chunk_pairs() const;
  const std::map<CitationLink, std::set<std::string>>& excluded_chunks_per_link() const {
    return per_link_;
  }

 private:
  friend ExclusionSet build_exclusions(std::span<const Chunk>, std::span<const CitationLink>,
                                       std::span<const DocumentRecord>);
  bool docs_share_author(const std::string& a, const std::string& b) const;

  std::unordered_map<std::string, std::string> chunk_doc_;
  std::unordered_map<std::string, std::vector<std::string>> doc_chunks_;
  std::unordered_map<std::string, std::set<std::string>> coauthors_;
  std::unordered_map<std::string, std::set<std::string>> flagged_;          // chunk -> cited docs
  std::unordered_map<std::string, std::set<std::string>> flagged_against_;  // cited doc -> chunks
  std::map<CitationLink, std::set<std::string>> per_link_;
};

// `docs` supplies authorship and cited texts.
ExclusionSet build_exclusions(std::span<const Chunk> chunks, std::span<const CitationLink> links,
                              std::span<const DocumentRecord> docs);

// CSV with header citing_doc_id,cited_doc_id,cited_author_last_names (names
// separated by ';'), or JSONL with the same keys (names as an array).
std::vector<CitationLink> read_citation_links(const std::filesystem::path& path);

}  // namespace precocity
