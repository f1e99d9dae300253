#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "precocity/corpus.hpp"

namespace precocity {

// Per-year subsample: min(quota, available) documents from each year, drawn
// uniformly with the given seed. Output is ordered by (year, input order).
std::vector<DocumentRecord> balanced_subsample(std::span<const DocumentRecord> docs,
                                               int per_year_quota, std::uint64_t seed);

// The built-in English stoplist (core/data/stoplist_en.txt).
const std::vector<std::string>& english_stoplist();

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  std::optional<int> find(const std::string& word) const;
  const std::string& word(int id) const { return words_[static_cast<std::size_t>(id)]; }
  const std::vector<std::string>& words() const { return words_; }
  int size() const { return static_cast<int>(words_.size()); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

struct VocabularyOptions {
  // Tokens present in fewer training chunks than this are dropped.
  int min_chunk_frequency = 5;
  std::vector<std::string> stoplist = english_stoplist();
};

// Lowercased vocabulary of the training chunks after pruning, sorted.
Vocabulary build_vocabulary(std::span<const Chunk> chunks, const VocabularyOptions& opts = {});

struct LdaOptions {
  int num_topics = 250;
  // Symmetric document-topic prior expressed as its sum; alpha = alpha_sum / K.
  double alpha_sum = 5.0;
  double beta = 0.01;
  int iterations = 1000;
  std::uint64_t seed = 1;
};

struct TopicDistribution {
  std::vector<double> probs;
};

// Collapsed-Gibbs LDA state. topic_word_counts is stored word-major
// (index w * K + k) so the sampler reads one contiguous row per token.
struct TopicModelState {
  int num_topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  Vocabulary vocabulary;
  std::vector<std::int64_t> topic_word_counts;
  std::vector<std::int64_t> topic_totals;
  std::vector<std::string> training_chunk_ids;
  std::vector<std::vector<std::int32_t>> doc_topic_counts;
  std::vector<std::vector<std::int32_t>> tokens;       // vocabulary ids per training chunk
  std::vector<std::vector<std::int32_t>> assignments;  // topic per token
  std::uint64_t rng_seed = 0;
  int iterations_run = 0;

  std::int64_t topic_word(int topic, int word) const {
    return topic_word_counts[static_cast<std::size_t>(word) * static_cast<std::size_t>(num_topics) +
                             static_cast<std::size_t>(topic)];
  }
  int vocabulary_size() const { return vocabulary.size(); }

  // Smoothed topic mixture of training chunk d: (n_dk + alpha) / (n_d + K alpha).
  TopicDistribution training_distribution(std::size_t d) const;

  // Throws ComputeError if counts disagree with the assignments.
  void check_consistency() const;
};

// Builds the vocabulary from `chunks` and runs collapsed Gibbs sampling.
TopicModelState train_topic_model(std::span<const Chunk> chunks, const LdaOptions& opts,
                                  const VocabularyOptions& vocab_opts = {});

// Runs `iterations` further Gibbs sweeps over the training state.
void gibbs_sweep(TopicModelState& state, int iterations, std::uint64_t seed);

struct InferenceOptions {
  int iterations = 100;
  int burn_in = 50;
  std::uint64_t seed = 7;
};

struct InferenceResult {
  TopicDistribution distribution;
  std::size_t in_vocabulary_tokens = 0;
  // Set when the chunk had no in-vocabulary tokens and the prior was returned.
  std::optional<std::string> warning;
};

// Samples the chunk's assignments against frozen topic-word counts and
// returns (mean post-burn-in count + alpha), normalized. The sampling seed is
// derived from opts.seed and the chunk id, so results do not depend on the
// order in which chunks are inferred.
InferenceResult infer(const TopicModelState& state, const Chunk& chunk,
                      const InferenceOptions& opts = {});

void save_topic_model(const TopicModelState& state, const std::filesystem::path& path);
TopicModelState load_topic_model(const std::filesystem::path& path);

}  // namespace precocity
