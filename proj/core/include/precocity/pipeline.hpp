#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <iosfwd>

#include "precocity/corpus.hpp"
#include "precocity/ngram_lm.hpp"
#include "precocity/regression.hpp"
#include "precocity/scoring.hpp"
#include "precocity/synth_bench.hpp"
#include "precocity/temporal.hpp"
#include "precocity/topic_model.hpp"

namespace precocity {

std::string_view library_version();

enum class Method { topics, embeddings, perplexity };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

struct TopicsSection {
  LdaOptions lda;
  int per_year_quota = 200;
  int min_chunk_frequency = 5;
  InferenceOptions inference;
  // Use an existing model instead of training one.
  std::optional<std::filesystem::path> model_path;
};

struct EmbeddingsSection {
  std::filesystem::path path;  // .csv, or binary with a .json sidecar
};

struct PerplexitySection {
  enum class Backend { builtin_ngram, external } backend = Backend::builtin_ngram;
  std::filesystem::path external_path;
  NgramOptions ngram;
  int window_len = 12;
  int offset = 4;
  std::optional<int> anchor_year;  // default: PeriodScheme::for_corpus
  PerplexityPooling pooling = PerplexityPooling::sentence_mean;
  bool prescience = true;  // also score the future-only variant
};

struct RegressionSection {
  std::vector<Response> responses = {Response::citation_count, Response::author_age,
                                     Response::discussed_flag};
  ResponseTransform transform = ResponseTransform::log1p;
  // Fit every (method, fraction, response) on the same documents.
  bool align_rows = false;
  GroupField group_field = GroupField::group_tags;
};

struct PipelineConfig {
  std::optional<std::filesystem::path> corpus_path;
  CorpusSchema schema;
  double paratext_fraction = 0.0;
  Method method = Method::topics;
  // corpus_start / corpus_end of 0 are filled from the ingested corpus.
  WindowConfig window;
  int min_comparisons = kDefaultMinComparisons;
  std::optional<double> similar_top_fraction;
  std::vector<double> fractions = {0.25, 1.0};
  bool novelty_from_all_chunks = false;
  std::optional<std::filesystem::path> citation_links;
  TopicsSection topics;
  EmbeddingsSection embeddings;
  PerplexitySection perplexity;
  RegressionSection regression;
  std::optional<SynthConfig> synth;
  std::optional<std::filesystem::path> ground_truth;
  std::filesystem::path output_dir = "precocity-out";
  std::uint64_t seed = 1;
  unsigned threads = 0;

  // The JSON the config was parsed from, after overrides; hashed into the
  // manifest.
  std::string canonical_json;

  // Relative paths in the file resolve against `base_dir`.
  static PipelineConfig from_json(const std::string& json_text, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});
  // Applies `dotted.key=value` overrides; values parse as JSON when they can,
  // otherwise as strings.
  static std::string apply_overrides(const std::string& json_text, const std::vector<std::string>& overrides);

  // Structural checks plus existence of every referenced input file. Throws
  // ConfigError before any computation starts.
  void validate() const;
  std::uint64_t hash() const;
};

inline const std::vector<std::string> kStageNames = {"synth",        "ingest", "chunk",   "topics-train",
                                                     "topics-infer", "perplexity", "score", "regress",
                                                     "report"};

struct StageOutcome {
  std::string stage;
  bool skipped = false;  // inputs unchanged since a completed run
};

// Runs pipeline stages against an output directory and keeps manifest.json
// there up to date. A failing stage leaves earlier outputs in place, marks
// itself failed in the manifest, and writes FAILED_STAGE.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, std::ostream* log = nullptr);

  // Every stage the configured method needs, in order.
  std::vector<StageOutcome> run();
  StageOutcome run_stage(const std::string& name);
  std::vector<std::string> stages_for_method() const;

  const PipelineConfig& config() const { return config_; }
  std::filesystem::path artifact(const std::string& name) const { return config_.output_dir / name; }
  // Method variants scored by this configuration, e.g. "perplexity" and
  // "perplexity_prescience".
  std::vector<std::string> variants() const;
  std::filesystem::path corpus_source() const;

 private:
  struct StageResult {
    std::vector<std::filesystem::path> outputs;
  };
  using StageFn = std::function<StageResult()>;

  StageOutcome execute(const std::string& name, const std::vector<std::filesystem::path>& inputs,
                       const std::string& params, const StageFn& fn);
  void log(const std::string& msg) const;

  StageResult do_synth();
  StageResult do_ingest();
  StageResult do_chunk();
  StageResult do_topics_train();
  StageResult do_topics_infer();
  StageResult do_perplexity();
  StageResult do_score();
  StageResult do_regress();
  StageResult do_report();

  PipelineConfig config_;
  std::ostream* log_;
};

std::string doc_scores_name(const std::string& variant, double fraction);
std::string chunk_scores_name(const std::string& variant);

// perplexities.csv as written by the perplexity stage (optional
// perplexity_present column).
std::vector<PerplexityRecord> read_perplexities_csv(const std::filesystem::path& path);

}  // namespace precocity
