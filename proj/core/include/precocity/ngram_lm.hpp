#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "precocity/corpus.hpp"
#include "precocity/scoring.hpp"
#include "precocity/temporal.hpp"

namespace precocity {

enum class Smoothing { add_k, interpolated_kneser_ney };

std::string_view to_string(Smoothing s);
Smoothing smoothing_from_string(std::string_view s);

struct NgramOptions {
  int order = 3;
  Smoothing smoothing = Smoothing::add_k;
  double k = 0.01;
  double discount = 0.75;  // Kneser-Ney absolute discount
  // Recorded in the model for provenance; training itself is deterministic.
  std::uint64_t seed = 0;
};

// Word-level n-gram model over lowercased tokens. Sentences are left-padded
// with order-1 <s> symbols; training tokens seen once are replaced by <unk>.
// The predicted event set is the vocabulary without <s>.
class NgramModel {
 public:
  static constexpr std::int32_t kUnk = 0;
  static constexpr std::int32_t kBos = 1;

  // Trains on the chunks whose year falls in `range`; throws DataError when
  // there are none.
  static NgramModel train(std::span<const Chunk> chunks, const YearRange& range,
                          const NgramOptions& opts);

  int order() const { return order_; }
  Smoothing smoothing() const { return smoothing_; }
  const YearRange& training_range() const { return range_; }
  std::size_t event_count() const { return words_.size() - 1; }
  const std::vector<std::string>& words() const { return words_; }

  std::int32_t id(const std::string& normalized_word) const;

  // P(word | context); `context` holds the preceding order-1 ids, oldest
  // first (shorter contexts are treated as <s>-padded).
  double probability(std::span<const std::int32_t> context, std::int32_t word) const;

  // Sum of natural-log probabilities and token count for one sentence.
  double sentence_log_prob(std::span<const std::string> tokens) const;

  void save(const std::filesystem::path& path) const;
  static NgramModel load(const std::filesystem::path& path);
  std::string to_json() const;

 private:
  struct Level {
    std::unordered_map<std::uint64_t, double> counts;         // full n-gram
    std::unordered_map<std::uint64_t, double> context_total;  // sum over next word
    std::unordered_map<std::uint64_t, double> context_types;  // distinct next words
  };

  std::uint64_t pack(std::span<const std::int32_t> ids) const;
  double kn_probability(std::span<const std::int32_t> context, std::int32_t word, int n) const;
  void finalize_levels();

  int order_ = 3;
  Smoothing smoothing_ = Smoothing::add_k;
  double k_ = 0.01;
  double discount_ = 0.75;
  std::uint64_t seed_ = 0;
  int bits_ = 21;
  YearRange range_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::vector<Level> levels_;  // levels_[n-1] holds n-grams
};

enum class PerplexityPooling { sentence_mean, token_pooled };

// exp(-mean log-prob) per sentence, averaged over the chunk's sentences, or
// pooled over every token when `pooling` is token_pooled.
double perplexity(const NgramModel& model, const Chunk& chunk,
                  PerplexityPooling pooling = PerplexityPooling::sentence_mean);

// 2 (past - future) / (past + future), in (-2, 2).
double perplexity_precocity(double perplexity_past, double perplexity_future);

// Future-only variant: (present - future) / present.
double perplexity_prescience(double perplexity_present, double perplexity_future);

enum class PerplexityBackend { builtin_ngram, external };

struct PerplexityRecord {
  std::string chunk_id;
  double perplexity_past = 0.0;
  double perplexity_future = 0.0;
  PerplexityBackend backend = PerplexityBackend::builtin_ngram;
  // Only filled by the built-in backend for the prescience comparison.
  std::optional<double> perplexity_present;
};

struct RejectedRow {
  std::size_t line = 0;
  std::string chunk_id;
  std::string reason;
};

struct PerplexityIngest {
  std::vector<PerplexityRecord> records;
  std::vector<RejectedRow> rejected;
};

// CSV with header chunk_id,perplexity_past,perplexity_future. Rows with
// unknown ids or non-positive / non-finite values are rejected and reported.
PerplexityIngest ingest_external_perplexities(const std::filesystem::path& path,
                                              const std::unordered_set<std::string>& known_chunk_ids);

void write_perplexities_csv(const std::filesystem::path& path, std::span<const PerplexityRecord> records);

enum class PerplexityVariant { two_sided, prescience };

struct PerplexityRunOptions {
  NgramOptions ngram;
  PeriodScheme scheme;
  YearRange corpus;
  PerplexityPooling pooling = PerplexityPooling::sentence_mean;
  bool with_present = false;  // also evaluate the present-period model
  unsigned threads = 0;
};

// Evaluates every chunk whose past and future periods lie inside the corpus
// against one model per distinct period. Models are trained one at a time
// and released once their chunks are evaluated. Chunks outside that span
// are omitted.
std::vector<PerplexityRecord> compute_perplexities(std::span<const Chunk> chunks,
                                                   const PerplexityRunOptions& opts);

// Chunk-level scores from perplexity records: novelty holds the past (or,
// for prescience, present) perplexity, transience the future perplexity, and
// precocity the variant's value.
std::vector<ChunkScore> perplexity_chunk_scores(std::span<const PerplexityRecord> records,
                                                std::span<const Chunk> chunks,
                                                PerplexityVariant variant = PerplexityVariant::two_sided);

// One row per chunk: its bucket and the past/future training ranges.
void write_period_assignments_csv(const std::filesystem::path& path, std::span<const Chunk> chunks,
                                  const PeriodScheme& scheme);

}  // namespace precocity
