#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "precocity/metric.hpp"
#include "precocity/reuse_filter.hpp"
#include "precocity/temporal.hpp"

namespace precocity {

enum class ScoreStatus { scored, not_central, insufficient_past, insufficient_future };

std::string_view to_string(ScoreStatus status);

struct ChunkScore {
  std::string chunk_id;
  std::string doc_id;
  int year = 0;
  double novelty = 0.0;
  double transience = 0.0;
  double precocity = 0.0;
  std::size_t n_past = 0;
  std::size_t n_future = 0;
  ScoreStatus status = ScoreStatus::scored;

  bool scored() const { return status == ScoreStatus::scored; }
};

inline constexpr int kDefaultMinComparisons = 10;

// Mean divergence of `target` from the eligible past and future vectors.
// Pairs listed in `exclusions` are skipped. Withheld (status set, values
// zero) when either side has fewer than min_comparisons eligible vectors.
ChunkScore score_chunk(const FeatureVector& target, std::span<const FeatureVector> past,
                       std::span<const FeatureVector> future, Metric metric,
                       const ExclusionSet& exclusions,
                       int min_comparisons = kDefaultMinComparisons);

// As score_chunk, but each side is first narrowed to the ceil(top_fraction
// * n) vectors closest to the target (at least one).
ChunkScore score_chunk_similar_subset(const FeatureVector& target,
                                      std::span<const FeatureVector> past,
                                      std::span<const FeatureVector> future, Metric metric,
                                      const ExclusionSet& exclusions, double top_fraction = 0.05,
                                      int min_comparisons = kDefaultMinComparisons);

// ceil(fraction * n) with a floor of one, guarded against representation
// error in fraction * n.
std::size_t top_count(double fraction, std::size_t n);

// Feature vectors of a whole corpus with the metadata scoring needs.
class FeatureStore {
 public:
  explicit FeatureStore(FeatureKind kind) : kind_(kind) {}

  // Validates the vector and appends it. All vectors share one dimension.
  void add(std::string chunk_id, std::string doc_id, int year, std::vector<double> values);

  FeatureKind kind() const { return kind_; }
  std::size_t size() const { return chunk_ids_.size(); }
  std::size_t dimension() const { return dim_; }
  const std::string& chunk_id(std::size_t i) const { return chunk_ids_[i]; }
  const std::string& doc_id(std::size_t i) const { return doc_ids_[i]; }
  int year(std::size_t i) const { return years_[i]; }
  std::span<const double> values(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  FeatureVector vector(std::size_t i) const;
  std::optional<std::size_t> find(std::string_view chunk_id) const;

 private:
  FeatureKind kind_;
  std::size_t dim_ = 0;
  std::vector<std::string> chunk_ids_;
  std::vector<std::string> doc_ids_;
  std::vector<int> years_;
  std::vector<double> values_;
};

struct ScoringOptions {
  Metric metric = Metric::kl;
  int min_comparisons = kDefaultMinComparisons;
  // Set to compare only against the most similar fraction of each window.
  std::optional<double> similar_top_fraction;
  // Score only chunks whose documents fall in the central period.
  bool central_only = true;
  unsigned threads = 0;
};

// Scores every chunk in the store against its comparison windows. Vectors
// are regrouped into contiguous per-year blocks so each target streams over
// the blocks inside its window; targets run in parallel. Output order
// follows the store.
std::vector<ChunkScore> score_corpus(const FeatureStore& store, const ExclusionSet& exclusions,
                                     const WindowConfig& window, const ScoringOptions& opts);

struct AggregationSpec {
  double fraction = 0.25;
  // Aggregate novelty and transience over all scored chunks instead of the
  // selected ones. Precocity always uses the selection.
  bool novelty_from_all_chunks = false;
};

struct DocScore {
  std::string doc_id;
  int year = 0;
  double novelty = 0.0;
  double transience = 0.0;
  double precocity = 0.0;
  double fraction = 1.0;
  std::size_t n_chunks = 0;    // scored chunks available
  std::size_t n_selected = 0;  // chunks averaged into precocity
  bool scored = false;
  std::string reason;  // set when unscored
};

// Mean over the ceil(fraction * n) highest-precocity scored chunks.
// Withheld chunks are ignored; with none left the document is unscored.
DocScore aggregate_document(std::span<const ChunkScore> chunk_scores, const AggregationSpec& spec);

// Groups by doc_id (first-appearance order) and aggregates each document.
std::vector<DocScore> aggregate_documents(std::span<const ChunkScore> chunk_scores,
                                          const AggregationSpec& spec);

void write_chunk_scores_csv(const std::filesystem::path& path, std::span<const ChunkScore> scores,
                            std::string_view method);
void write_doc_scores_csv(const std::filesystem::path& path, std::span<const DocScore> scores,
                          std::string_view method);
std::vector<ChunkScore> read_chunk_scores_csv(const std::filesystem::path& path);
std::vector<DocScore> read_doc_scores_csv(const std::filesystem::path& path);

}  // namespace precocity
