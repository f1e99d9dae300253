#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "precocity/corpus.hpp"
#include "precocity/scoring.hpp"
#include "precocity/temporal.hpp"

namespace precocity {

struct SynthConfig {
  YearRange years{1900, 1939};
  int docs_per_year = 50;
  int vocab_size = 5000;
  int k_true = 20;
  // Year mixtures follow m[y+1] ~ Dirichlet(m[y] / d), lightly floored
  // towards uniform, so d sets the variance of each year's step.
  double drift_rate = 0.01;
  double innovator_fraction = 0.3;
  int lead_years = 8;
  double innovator_chunk_fraction = 0.25;
  int chunks_per_doc = 8;
  // Each chunk is sentences_per_chunk sentences of sentence_length words, so
  // with the defaults it fills exactly one 512-token chunk at either
  // granularity.
  int sentences_per_chunk = 32;
  int sentence_length = 16;
  // Dirichlet concentration of a chunk's topic mixture around its source
  // year's mixture.
  double chunk_concentration = 50.0;
  // Symmetric Dirichlet parameter of the planted topic-word distributions.
  double topic_word_concentration = 0.1;
  // Citations ~ Poisson(base), multiplied by innovator_citation_boost for
  // innovators.
  double base_citations = 5.0;
  double innovator_citation_boost = 3.0;
  std::uint64_t seed = 1;

  // Throws ConfigError on invalid settings, including a lead that leaves no
  // year able to host an innovator.
  void validate() const;
};

struct PlantedDoc {
  bool is_innovator = false;
  int lead_years = 0;
  std::set<std::string> forward_chunk_ids;  // topic-granularity chunk ids
};

struct GroundTruth {
  std::map<std::string, PlantedDoc> docs;

  std::size_t innovator_count() const;
};

struct SynthCorpus {
  std::vector<DocumentRecord> docs;
  GroundTruth truth;
};

// Ordinary chunks sample from their year's mixture; an innovator's
// forward chunks sample from the mixture lead_years ahead. Innovators are
// drawn only from years that have a mixture lead_years ahead. Deterministic
// per seed.
SynthCorpus generate(const SynthConfig& config);

void write_ground_truth_json(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth read_ground_truth_json(const std::filesystem::path& path);

// P(random positive outranks random negative), ties counted one half.
double auc(std::span<const double> scores, std::span<const bool> positive);
// Pearson correlation of average ranks.
double spearman(std::span<const double> a, std::span<const double> b);

struct SynthEvaluation {
  double spearman = 0.0;
  double auc = 0.0;
  // auc at fraction 0.25 minus auc at fraction 1.0; absent unless the
  // scores contain both fractions.
  std::optional<double> top_quartile_gain;
  double fraction = 0.25;
  std::size_t n_docs = 0;
  std::size_t n_innovators = 0;
};

// Scores are grouped by DocScore::fraction. spearman and auc come from
// `primary_fraction` (or the only fraction present); unscored documents and
// documents missing from the truth are ignored. Throws DataError when the
// evaluated set has no innovators or no ordinary documents.
SynthEvaluation evaluate(std::span<const DocScore> doc_scores, const GroundTruth& truth,
                         double primary_fraction = 0.25);

}  // namespace precocity
