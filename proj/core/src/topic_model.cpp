#include "precocity/topic_model.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "precocity/error.hpp"
#include "precocity/random.hpp"
#include "precocity/table_io.hpp"
#include "precocity/tokenizer.hpp"

namespace precocity {

namespace detail {
extern const std::string_view kEnglishStoplist;
}

namespace {

constexpr int kModelFormatVersion = 1;
constexpr const char* kModelFormat = "precocity.topic_model";

std::vector<std::int32_t> encode(const Vocabulary& vocab, const Chunk& chunk) {
  std::vector<std::int32_t> ids;
  ids.reserve(chunk.tokens.size());
  for (const auto& t : chunk.tokens) {
    if (auto id = vocab.find(normalize_token(t))) ids.push_back(*id);
  }
  return ids;
}

int sample_topic(Rng& rng, std::vector<double>& weights) {
  double total = 0.0;
  for (double& w : weights) {
    total += w;
    w = total;
  }
  const double u = uniform01(rng) * total;
  const auto it = std::upper_bound(weights.begin(), weights.end(), u);
  const auto k = static_cast<int>(it - weights.begin());
  return std::min(k, static_cast<int>(weights.size()) - 1);
}

}  // namespace

std::vector<DocumentRecord> balanced_subsample(std::span<const DocumentRecord> docs,
                                               int per_year_quota, std::uint64_t seed) {
  if (docs.empty()) throw DataError("balanced_subsample: empty corpus");
  if (per_year_quota < 1) throw ConfigError("balanced_subsample: per_year_quota must be >= 1");
  std::map<int, std::vector<std::size_t>> by_year;
  for (std::size_t i = 0; i < docs.size(); ++i) by_year[docs[i].year].push_back(i);

  Rng rng(seed);
  std::vector<DocumentRecord> out;
  for (auto& [year, idx] : by_year) {
    const std::size_t take = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(per_year_quota));
    // Partial Fisher-Yates: the first `take` slots become the sample.
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + uniform_index(rng, idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    std::vector<std::size_t> chosen(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i : chosen) out.push_back(docs[i]);
  }
  return out;
}

const std::vector<std::string>& english_stoplist() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> out;
    std::istringstream in{std::string(detail::kEnglishStoplist)};
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
  }();
  return words;
}

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], static_cast<int>(i)).second)
      throw DataError("vocabulary contains duplicate word '" + words_[i] + "'");
  }
}

std::optional<int> Vocabulary::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(std::span<const Chunk> chunks, const VocabularyOptions& opts) {
  std::unordered_set<std::string> stop(opts.stoplist.begin(), opts.stoplist.end());
  std::unordered_map<std::string, int> chunk_freq;
  for (const auto& c : chunks) {
    std::unordered_set<std::string> seen;
    for (const auto& t : c.tokens) {
      std::string w = normalize_token(t);
      if (stop.count(w)) continue;
      if (seen.insert(w).second) ++chunk_freq[w];
    }
  }
  std::vector<std::string> words;
  for (auto& [w, f] : chunk_freq) {
    if (f >= opts.min_chunk_frequency) words.push_back(w);
  }
  std::sort(words.begin(), words.end());
  return Vocabulary(std::move(words));
}

TopicDistribution TopicModelState::training_distribution(std::size_t d) const {
  const auto& counts = doc_topic_counts.at(d);
  const double n = static_cast<double>(tokens.at(d).size());
  TopicDistribution out;
  out.probs.resize(static_cast<std::size_t>(num_topics));
  const double denom = n + num_topics * alpha;
  for (int k = 0; k < num_topics; ++k) out.probs[static_cast<std::size_t>(k)] = (counts[static_cast<std::size_t>(k)] + alpha) / denom;
  return out;
}

void TopicModelState::check_consistency() const {
  const auto K = static_cast<std::size_t>(num_topics);
  std::vector<std::int64_t> tw(topic_word_counts.size(), 0), totals(K, 0);
  std::size_t n_tokens = 0;
  for (std::size_t d = 0; d < tokens.size(); ++d) {
    std::vector<std::int32_t> dt(K, 0);
    for (std::size_t i = 0; i < tokens[d].size(); ++i) {
      const auto k = static_cast<std::size_t>(assignments[d][i]);
      ++tw[static_cast<std::size_t>(tokens[d][i]) * K + k];
      ++totals[k];
      ++dt[k];
      ++n_tokens;
    }
    if (dt != doc_topic_counts[d]) throw ComputeError("doc-topic counts inconsistent for chunk " + std::to_string(d));
  }
  if (tw != topic_word_counts) throw ComputeError("topic-word counts inconsistent with assignments");
  if (totals != topic_totals) throw ComputeError("topic totals inconsistent with assignments");
  const auto sum = std::accumulate(topic_totals.begin(), topic_totals.end(), std::int64_t{0});
  if (static_cast<std::size_t>(sum) != n_tokens) throw ComputeError("total assignments differ from token count");
}

void gibbs_sweep(TopicModelState& s, int iterations, std::uint64_t seed) {
  const int K = s.num_topics;
  const auto Ku = static_cast<std::size_t>(K);
  const double vbeta = s.vocabulary_size() * s.beta;
  Rng rng(seed);
  std::vector<double> inv_denom(Ku), weights(Ku);
  for (std::size_t k = 0; k < Ku; ++k) inv_denom[k] = 1.0 / (static_cast<double>(s.topic_totals[k]) + vbeta);

  for (int it = 0; it < iterations; ++it) {
    for (std::size_t d = 0; d < s.tokens.size(); ++d) {
      auto& dt = s.doc_topic_counts[d];
      const auto& toks = s.tokens[d];
      auto& z = s.assignments[d];
      for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto w = static_cast<std::size_t>(toks[i]);
        std::int64_t* row = &s.topic_word_counts[w * Ku];
        const auto old = static_cast<std::size_t>(z[i]);
        --dt[old];
        --row[old];
        --s.topic_totals[old];
        inv_denom[old] = 1.0 / (static_cast<double>(s.topic_totals[old]) + vbeta);
        for (std::size_t k = 0; k < Ku; ++k)
          weights[k] = (dt[k] + s.alpha) * (static_cast<double>(row[k]) + s.beta) * inv_denom[k];
        const auto k_new = static_cast<std::size_t>(sample_topic(rng, weights));
        z[i] = static_cast<std::int32_t>(k_new);
        ++dt[k_new];
        ++row[k_new];
        ++s.topic_totals[k_new];
        inv_denom[k_new] = 1.0 / (static_cast<double>(s.topic_totals[k_new]) + vbeta);
      }
    }
    ++s.iterations_run;
  }
}

TopicModelState train_topic_model(std::span<const Chunk> chunks, const LdaOptions& opts,
                                  const VocabularyOptions& vocab_opts) {
  if (opts.num_topics < 1) throw ConfigError("num_topics must be >= 1");
  if (!(opts.alpha_sum > 0.0) || !(opts.beta > 0.0)) throw ConfigError("LDA priors must be positive");
  if (opts.iterations < 1) throw ConfigError("LDA iterations must be >= 1");

  TopicModelState s;
  s.num_topics = opts.num_topics;
  s.alpha = opts.alpha_sum / opts.num_topics;
  s.beta = opts.beta;
  s.rng_seed = opts.seed;
  s.vocabulary = build_vocabulary(chunks, vocab_opts);
  if (s.vocabulary.size() == 0) throw DataError("topic model vocabulary is empty after pruning");

  const auto K = static_cast<std::size_t>(s.num_topics);
  s.topic_word_counts.assign(static_cast<std::size_t>(s.vocabulary.size()) * K, 0);
  s.topic_totals.assign(K, 0);
  Rng init(derive_seed(opts.seed, "lda-init"));
  for (const auto& c : chunks) {
    s.training_chunk_ids.push_back(c.chunk_id);
    auto ids = encode(s.vocabulary, c);
    std::vector<std::int32_t> z(ids.size());
    std::vector<std::int32_t> dt(K, 0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto k = static_cast<std::size_t>(uniform_index(init, K));
      z[i] = static_cast<std::int32_t>(k);
      ++dt[k];
      ++s.topic_word_counts[static_cast<std::size_t>(ids[i]) * K + k];
      ++s.topic_totals[k];
    }
    s.tokens.push_back(std::move(ids));
    s.assignments.push_back(std::move(z));
    s.doc_topic_counts.push_back(std::move(dt));
  }
  gibbs_sweep(s, opts.iterations, derive_seed(opts.seed, "lda-sweeps"));
  return s;
}

InferenceResult infer(const TopicModelState& s, const Chunk& chunk, const InferenceOptions& opts) {
  if (opts.iterations < 1 || opts.burn_in < 0 || opts.burn_in >= opts.iterations)
    throw ConfigError("inference needs iterations >= 1 and 0 <= burn_in < iterations");
  const int K = s.num_topics;
  const auto Ku = static_cast<std::size_t>(K);
  InferenceResult result;
  result.distribution.probs.assign(Ku, 1.0 / K);

  const auto ids = encode(s.vocabulary, chunk);
  result.in_vocabulary_tokens = ids.size();
  if (ids.empty()) {
    result.warning = "chunk " + chunk.chunk_id + " has no in-vocabulary tokens; returning the prior";
    return result;
  }

  const double vbeta = s.vocabulary_size() * s.beta;
  std::vector<double> word_term(Ku), weights(Ku);
  std::vector<double> inv_denom(Ku);
  for (std::size_t k = 0; k < Ku; ++k) inv_denom[k] = 1.0 / (static_cast<double>(s.topic_totals[k]) + vbeta);

  Rng rng(derive_seed(opts.seed, chunk.chunk_id));
  std::vector<std::int32_t> z(ids.size());
  std::vector<double> dt(Ku, 0.0);
  // Initialize from the frozen topic-word term alone.
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::int64_t* row = &s.topic_word_counts[static_cast<std::size_t>(ids[i]) * Ku];
    for (std::size_t k = 0; k < Ku; ++k) weights[k] = (static_cast<double>(row[k]) + s.beta) * inv_denom[k];
    const auto k = static_cast<std::size_t>(sample_topic(rng, weights));
    z[i] = static_cast<std::int32_t>(k);
    dt[k] += 1.0;
  }

  std::vector<double> accumulated(Ku, 0.0);
  int samples = 0;
  for (int it = 0; it < opts.iterations; ++it) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const std::int64_t* row = &s.topic_word_counts[static_cast<std::size_t>(ids[i]) * Ku];
      const auto old = static_cast<std::size_t>(z[i]);
      dt[old] -= 1.0;
      for (std::size_t k = 0; k < Ku; ++k)
        weights[k] = (dt[k] + s.alpha) * (static_cast<double>(row[k]) + s.beta) * inv_denom[k];
      const auto k_new = static_cast<std::size_t>(sample_topic(rng, weights));
      z[i] = static_cast<std::int32_t>(k_new);
      dt[k_new] += 1.0;
    }
    if (it >= opts.burn_in) {
      for (std::size_t k = 0; k < Ku; ++k) accumulated[k] += dt[k];
      ++samples;
    }
  }

  const double n = static_cast<double>(ids.size());
  const double denom = n + K * s.alpha;
  for (std::size_t k = 0; k < Ku; ++k)
    result.distribution.probs[k] = (accumulated[k] / samples + s.alpha) / denom;
  return result;
}

void save_topic_model(const TopicModelState& s, const std::filesystem::path& path) {
  using nlohmann::json;
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelFormatVersion;
  j["num_topics"] = s.num_topics;
  j["alpha"] = s.alpha;
  j["beta"] = s.beta;
  j["rng_seed"] = s.rng_seed;
  j["iterations_run"] = s.iterations_run;
  j["vocabulary"] = s.vocabulary.words();
  // Serialized topic-major (K rows of V counts).
  json rows = json::array();
  const auto K = static_cast<std::size_t>(s.num_topics);
  const auto V = static_cast<std::size_t>(s.vocabulary.size());
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<std::int64_t> row(V);
    for (std::size_t w = 0; w < V; ++w) row[w] = s.topic_word_counts[w * K + k];
    rows.push_back(std::move(row));
  }
  j["topic_word_counts"] = std::move(rows);
  j["training_chunk_ids"] = s.training_chunk_ids;
  j["doc_topic_counts"] = s.doc_topic_counts;
  j["tokens"] = s.tokens;
  j["assignments"] = s.assignments;
  write_file(path, j.dump());
}

TopicModelState load_topic_model(const std::filesystem::path& path) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": invalid topic model JSON: " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kModelFormat)
      throw DataError(path.string() + ": not a topic model file");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw DataError(path.string() + ": unsupported topic model version");
    TopicModelState s;
    s.num_topics = j.at("num_topics").get<int>();
    s.alpha = j.at("alpha").get<double>();
    s.beta = j.at("beta").get<double>();
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    s.iterations_run = j.at("iterations_run").get<int>();
    s.vocabulary = Vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
    const auto K = static_cast<std::size_t>(s.num_topics);
    const auto V = static_cast<std::size_t>(s.vocabulary.size());
    const auto& rows = j.at("topic_word_counts");
    if (rows.size() != K) throw DataError(path.string() + ": topic_word_counts has wrong row count");
    s.topic_word_counts.assign(K * V, 0);
    s.topic_totals.assign(K, 0);
    for (std::size_t k = 0; k < K; ++k) {
      const auto row = rows[k].get<std::vector<std::int64_t>>();
      if (row.size() != V) throw DataError(path.string() + ": topic_word_counts row has wrong length");
      for (std::size_t w = 0; w < V; ++w) {
        s.topic_word_counts[w * K + k] = row[w];
        s.topic_totals[k] += row[w];
      }
    }
    s.training_chunk_ids = j.at("training_chunk_ids").get<std::vector<std::string>>();
    s.doc_topic_counts = j.at("doc_topic_counts").get<std::vector<std::vector<std::int32_t>>>();
    s.tokens = j.at("tokens").get<std::vector<std::vector<std::int32_t>>>();
    s.assignments = j.at("assignments").get<std::vector<std::vector<std::int32_t>>>();
    return s;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed topic model: " + e.what());
  }
}

}  // namespace precocity
