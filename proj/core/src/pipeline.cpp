#include "precocity/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "precocity/error.hpp"
#include "precocity/feature_io.hpp"
#include "precocity/parallel.hpp"
#include "precocity/random.hpp"
#include "precocity/reuse_filter.hpp"
#include "precocity/table_io.hpp"

namespace precocity {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kVersion = "0.3.0";

// Reads typed values out of one config section and rejects unknown keys so
// typos surface as errors instead of silently falling back to defaults.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("config: '" + name_ + "' must be an object");
  }

  void allow(std::initializer_list<std::string_view> keys) const {
    for (const auto& [k, v] : j_.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end())
        throw ConfigError("config: unknown key '" + where(k) + "'");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <class T>
  void get(const std::string& key, T& out) const {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: '" + where(key) + "' has the wrong type");
    }
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) const {
    if (!has(key)) return;
    T v{};
    get(key, v);
    out = v;
  }

  Section sub(const std::string& key) const { return Section(j_.at(key), where(key)); }
  const json& raw(const std::string& key) const { return j_.at(key); }
  std::string where(std::string_view key) const { return name_.empty() ? std::string(key) : name_ + "." + std::string(key); }

 private:
  const json& j_;
  std::string name_;
};

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t file_hash(const fs::path& p) { return fnv1a64(read_file(p)); }

std::string format_fraction(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", f);
  return buf;
}

PerplexityPooling pooling_from_string(std::string_view s) {
  if (s == "sentence_mean") return PerplexityPooling::sentence_mean;
  if (s == "token_pooled") return PerplexityPooling::token_pooled;
  throw ConfigError("unknown perplexity pooling '" + std::string(s) + "'");
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ConfigError(what + " not found: " + p.string());
  if (fs::is_directory(p)) throw ConfigError(what + " is a directory: " + p.string());
}

YearRange corpus_years(std::span<const DocumentRecord> docs) {
  if (docs.empty()) throw DataError("corpus is empty");
  YearRange r{docs.front().year, docs.front().year};
  for (const auto& d : docs) {
    r.first = std::min(r.first, d.year);
    r.last = std::max(r.last, d.year);
  }
  return r;
}

}  // namespace

std::string_view library_version() { return kVersion; }

std::string_view to_string(Method m) {
  switch (m) {
    case Method::topics: return "topics";
    case Method::embeddings: return "embeddings";
    case Method::perplexity: return "perplexity";
  }
  return "unknown";
}

Method method_from_string(std::string_view s) {
  if (s == "topics") return Method::topics;
  if (s == "embeddings") return Method::embeddings;
  if (s == "perplexity") return Method::perplexity;
  throw ConfigError("unknown method '" + std::string(s) + "' (expected topics, embeddings or perplexity)");
}

std::string PipelineConfig::apply_overrides(const std::string& json_text, const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json_text.empty() ? json::object() : json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
    const std::string key = o.substr(0, eq);
    const std::string value = o.substr(eq + 1);
    json v = json::parse(value, nullptr, false);
    if (v.is_discarded()) v = value;
    json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (part.empty()) throw ConfigError("override '" + o + "' has an empty key segment");
      if (!node->is_object()) throw ConfigError("override '" + o + "' descends into a non-object");
      if (dot == std::string::npos) {
        (*node)[part] = v;
        break;
      }
      node = &(*node)[part];
      if (node->is_null()) *node = json::object();
      start = dot + 1;
    }
  }
  return j.dump();
}

PipelineConfig PipelineConfig::from_json(const std::string& json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  c.canonical_json = j.dump();
  const Section top(j, "");
  top.allow({"corpus", "method", "window", "aggregation", "exclusions", "topics", "embeddings", "perplexity",
             "regression", "synth", "ground_truth", "output_dir", "seed", "threads"});

  if (top.has("corpus")) {
    const Section s = top.sub("corpus");
    s.allow({"path", "fields", "min_year", "max_year", "paratext_fraction"});
    std::string path;
    s.get("path", path);
    if (!path.empty()) c.corpus_path = resolve(base_dir, path);
    s.get("min_year", c.schema.min_year);
    s.get("max_year", c.schema.max_year);
    s.get("paratext_fraction", c.paratext_fraction);
    if (s.has("fields")) {
      const Section f = s.sub("fields");
      f.allow({"doc_id", "year", "text", "author_ids", "citation_count", "author_birth_year", "group_tags",
               "discussed_flag"});
      f.get("doc_id", c.schema.doc_id);
      f.get("year", c.schema.year);
      f.get("text", c.schema.text);
      f.get("author_ids", c.schema.author_ids);
      f.get("citation_count", c.schema.citation_count);
      f.get("author_birth_year", c.schema.author_birth_year);
      f.get("group_tags", c.schema.group_tags);
      f.get("discussed_flag", c.schema.discussed_flag);
    }
  }
  std::string method = "topics";
  top.get("method", method);
  c.method = method_from_string(method);

  if (top.has("window")) {
    const Section s = top.sub("window");
    s.allow({"past_years", "future_years", "corpus_start", "corpus_end", "exclusive_central_end", "min_comparisons",
             "similar_top_fraction"});
    s.get("past_years", c.window.past_years);
    s.get("future_years", c.window.future_years);
    s.get("corpus_start", c.window.corpus_start);
    s.get("corpus_end", c.window.corpus_end);
    s.get("exclusive_central_end", c.window.exclusive_central_end);
    s.get("min_comparisons", c.min_comparisons);
    s.get("similar_top_fraction", c.similar_top_fraction);
  }
  if (top.has("aggregation")) {
    const Section s = top.sub("aggregation");
    s.allow({"fractions", "novelty_from_all_chunks"});
    s.get("fractions", c.fractions);
    s.get("novelty_from_all_chunks", c.novelty_from_all_chunks);
  }
  if (top.has("exclusions")) {
    const Section s = top.sub("exclusions");
    s.allow({"citation_links"});
    std::string p;
    s.get("citation_links", p);
    if (!p.empty()) c.citation_links = resolve(base_dir, p);
  }
  top.get("seed", c.seed);
  top.get("threads", c.threads);
  c.topics.lda.seed = derive_seed(c.seed, "topics");
  c.topics.inference.seed = derive_seed(c.seed, "inference");
  c.perplexity.ngram.seed = c.seed;

  if (top.has("topics")) {
    const Section s = top.sub("topics");
    s.allow({"num_topics", "alpha_sum", "beta", "iterations", "per_year_quota", "min_chunk_frequency",
             "inference_iterations", "inference_burn_in", "model_path"});
    s.get("num_topics", c.topics.lda.num_topics);
    s.get("alpha_sum", c.topics.lda.alpha_sum);
    s.get("beta", c.topics.lda.beta);
    s.get("iterations", c.topics.lda.iterations);
    s.get("per_year_quota", c.topics.per_year_quota);
    s.get("min_chunk_frequency", c.topics.min_chunk_frequency);
    s.get("inference_iterations", c.topics.inference.iterations);
    s.get("inference_burn_in", c.topics.inference.burn_in);
    std::string p;
    s.get("model_path", p);
    if (!p.empty()) c.topics.model_path = resolve(base_dir, p);
  }
  if (top.has("embeddings")) {
    const Section s = top.sub("embeddings");
    s.allow({"path"});
    std::string p;
    s.get("path", p);
    c.embeddings.path = resolve(base_dir, p);
  }
  if (top.has("perplexity")) {
    const Section s = top.sub("perplexity");
    s.allow({"backend", "external_path", "order", "smoothing", "k", "discount", "window_len", "offset",
             "anchor_year", "pooling", "prescience"});
    std::string backend = "ngram";
    s.get("backend", backend);
    if (backend == "ngram" || backend == "builtin_ngram")
      c.perplexity.backend = PerplexitySection::Backend::builtin_ngram;
    else if (backend == "external")
      c.perplexity.backend = PerplexitySection::Backend::external;
    else
      throw ConfigError("unknown perplexity backend '" + backend + "'");
    std::string p;
    s.get("external_path", p);
    if (!p.empty()) c.perplexity.external_path = resolve(base_dir, p);
    s.get("order", c.perplexity.ngram.order);
    if (s.has("smoothing")) {
      std::string sm;
      s.get("smoothing", sm);
      c.perplexity.ngram.smoothing = smoothing_from_string(sm);
    }
    s.get("k", c.perplexity.ngram.k);
    s.get("discount", c.perplexity.ngram.discount);
    s.get("window_len", c.perplexity.window_len);
    s.get("offset", c.perplexity.offset);
    s.get("anchor_year", c.perplexity.anchor_year);
    if (s.has("pooling")) {
      std::string pool;
      s.get("pooling", pool);
      c.perplexity.pooling = pooling_from_string(pool);
    }
    s.get("prescience", c.perplexity.prescience);
  }
  if (top.has("regression")) {
    const Section s = top.sub("regression");
    s.allow({"responses", "transform", "align_rows", "group_field"});
    if (s.has("responses")) {
      std::vector<std::string> rs;
      s.get("responses", rs);
      c.regression.responses.clear();
      for (const auto& r : rs) c.regression.responses.push_back(response_from_string(r));
    }
    if (s.has("transform")) {
      std::string t;
      s.get("transform", t);
      if (t == "log1p") c.regression.transform = ResponseTransform::log1p;
      else if (t == "raw") c.regression.transform = ResponseTransform::raw;
      else throw ConfigError("unknown regression transform '" + t + "'");
    }
    s.get("align_rows", c.regression.align_rows);
    if (s.has("group_field")) {
      std::string g;
      s.get("group_field", g);
      if (g == "group_tags") c.regression.group_field = GroupField::group_tags;
      else if (g == "author_ids") c.regression.group_field = GroupField::author_ids;
      else throw ConfigError("unknown group_field '" + g + "'");
    }
  }
  if (top.has("synth")) {
    const Section s = top.sub("synth");
    s.allow({"years", "docs_per_year", "vocab_size", "k_true", "drift_rate", "innovator_fraction", "lead_years",
             "innovator_chunk_fraction", "chunks_per_doc", "sentences_per_chunk", "sentence_length",
             "chunk_concentration", "topic_word_concentration", "base_citations", "innovator_citation_boost",
             "seed"});
    SynthConfig sc;
    sc.seed = c.seed;
    if (s.has("years")) {
      std::vector<int> y;
      s.get("years", y);
      if (y.size() != 2) throw ConfigError("config: 'synth.years' must be [first, last]");
      sc.years = {y[0], y[1]};
    }
    s.get("docs_per_year", sc.docs_per_year);
    s.get("vocab_size", sc.vocab_size);
    s.get("k_true", sc.k_true);
    s.get("drift_rate", sc.drift_rate);
    s.get("innovator_fraction", sc.innovator_fraction);
    s.get("lead_years", sc.lead_years);
    s.get("innovator_chunk_fraction", sc.innovator_chunk_fraction);
    s.get("chunks_per_doc", sc.chunks_per_doc);
    s.get("sentences_per_chunk", sc.sentences_per_chunk);
    s.get("sentence_length", sc.sentence_length);
    s.get("chunk_concentration", sc.chunk_concentration);
    s.get("topic_word_concentration", sc.topic_word_concentration);
    s.get("base_citations", sc.base_citations);
    s.get("innovator_citation_boost", sc.innovator_citation_boost);
    s.get("seed", sc.seed);
    c.synth = sc;
  }
  std::string gt;
  top.get("ground_truth", gt);
  if (!gt.empty()) c.ground_truth = resolve(base_dir, gt);
  std::string out;
  top.get("output_dir", out);
  if (!out.empty()) c.output_dir = resolve(base_dir, out);
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path, const std::vector<std::string>& overrides) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return from_json(apply_overrides(read_file(path), overrides), path.parent_path());
}

void PipelineConfig::validate() const {
  if (!corpus_path && !synth) throw ConfigError("config: corpus.path is required unless a synth section is given");
  if (corpus_path && !synth) require_file(*corpus_path, "corpus file");
  if (!(paratext_fraction >= 0.0 && paratext_fraction < 0.5))
    throw ConfigError("config: corpus.paratext_fraction must lie in [0, 0.5)");
  if (window.past_years <= 0 || window.future_years <= 0) throw ConfigError("config: window sizes must be positive");
  if (min_comparisons < 1) throw ConfigError("config: window.min_comparisons must be at least 1");
  if (similar_top_fraction && !(*similar_top_fraction > 0.0 && *similar_top_fraction <= 1.0))
    throw ConfigError("config: window.similar_top_fraction must lie in (0, 1]");
  if (fractions.empty()) throw ConfigError("config: aggregation.fractions is empty");
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("config: aggregation fraction " + format_real(f) + " outside (0, 1]");
  if (citation_links) require_file(*citation_links, "citation links file");
  if (ground_truth) require_file(*ground_truth, "ground truth file");
  if (synth) synth->validate();
  switch (method) {
    case Method::topics:
      if (topics.model_path) require_file(*topics.model_path, "topic model");
      if (topics.lda.num_topics < 2) throw ConfigError("config: topics.num_topics must be at least 2");
      if (topics.lda.iterations < 1) throw ConfigError("config: topics.iterations must be positive");
      if (topics.per_year_quota < 1) throw ConfigError("config: topics.per_year_quota must be at least 1");
      if (topics.inference.iterations < 1 || topics.inference.burn_in < 0 ||
          topics.inference.burn_in >= topics.inference.iterations)
        throw ConfigError("config: topics inference needs 0 <= burn_in < iterations");
      break;
    case Method::embeddings:
      if (embeddings.path.empty()) throw ConfigError("config: embeddings.path is required for the embeddings method");
      require_file(embeddings.path, "embeddings file");
      if (embeddings.path.extension() != ".csv") require_file(sidecar_path(embeddings.path), "embeddings sidecar");
      break;
    case Method::perplexity:
      if (perplexity.backend == PerplexitySection::Backend::external) {
        if (perplexity.external_path.empty())
          throw ConfigError("config: perplexity.external_path is required for the external backend");
        require_file(perplexity.external_path, "external perplexity file");
      }
      if (perplexity.ngram.order < 1) throw ConfigError("config: perplexity.order must be at least 1");
      PeriodScheme{perplexity.window_len, perplexity.offset, 0}.validate();
      break;
  }
}

std::uint64_t PipelineConfig::hash() const { return fnv1a64(canonical_json); }

std::string doc_scores_name(const std::string& variant, double fraction) {
  return "doc_scores_" + variant + "_f" + format_fraction(fraction) + ".csv";
}

std::string chunk_scores_name(const std::string& variant) { return "chunk_scores_" + variant + ".csv"; }

std::vector<PerplexityRecord> read_perplexities_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t ci = t.column("chunk_id"), pi = t.column("perplexity_past"), fi = t.column("perplexity_future");
  std::optional<std::size_t> ri, bi;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i] == "perplexity_present") ri = i;
    if (t.header[i] == "backend") bi = i;
  }
  std::vector<PerplexityRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.header.size())
      throw DataError(path.string() + ":" + std::to_string(t.line_numbers[r]) + ": wrong field count");
    PerplexityRecord rec;
    rec.chunk_id = row[ci];
    try {
      rec.perplexity_past = std::stod(row[pi]);
      rec.perplexity_future = std::stod(row[fi]);
      if (ri && !row[*ri].empty()) rec.perplexity_present = std::stod(row[*ri]);
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(t.line_numbers[r]) + ": malformed perplexity");
    }
    if (bi && row[*bi] == "external") rec.backend = PerplexityBackend::external;
    out.push_back(std::move(rec));
  }
  return out;
}

Pipeline::Pipeline(PipelineConfig config, std::ostream* log) : config_(std::move(config)), log_(log) {
  config_.validate();
}

void Pipeline::log(const std::string& msg) const {
  if (log_) *log_ << "[precocity] " << msg << '\n' << std::flush;
}

fs::path Pipeline::corpus_source() const {
  if (config_.synth) return artifact("synth_corpus.jsonl");
  return *config_.corpus_path;
}

std::vector<std::string> Pipeline::variants() const {
  if (config_.method == Method::perplexity) {
    std::vector<std::string> v = {"perplexity"};
    if (config_.perplexity.prescience && config_.perplexity.backend == PerplexitySection::Backend::builtin_ngram)
      v.push_back("perplexity_prescience");
    return v;
  }
  return {std::string(to_string(config_.method))};
}

std::vector<std::string> Pipeline::stages_for_method() const {
  std::vector<std::string> s;
  if (config_.synth) s.push_back("synth");
  s.insert(s.end(), {"ingest", "chunk"});
  if (config_.method == Method::topics) {
    if (!config_.topics.model_path) s.push_back("topics-train");
    s.push_back("topics-infer");
  } else if (config_.method == Method::perplexity) {
    s.push_back("perplexity");
  }
  s.insert(s.end(), {"score", "regress", "report"});
  return s;
}

std::vector<StageOutcome> Pipeline::run() {
  std::vector<StageOutcome> out;
  for (const auto& s : stages_for_method()) out.push_back(run_stage(s));
  return out;
}

StageOutcome Pipeline::execute(const std::string& name, const std::vector<fs::path>& inputs, const std::string& params,
                               const StageFn& fn) {
  fs::create_directories(config_.output_dir);
  const fs::path manifest_path = artifact("manifest.json");
  json manifest = json::object();
  if (fs::exists(manifest_path)) {
    manifest = json::parse(read_file(manifest_path), nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object()) manifest = json::object();
  }
  manifest["format"] = "precocity.manifest";
  manifest["version"] = 1;
  manifest["tool_version"] = kVersion;
  manifest["config_hash"] = hex64(config_.hash());
  manifest["config"] = json::parse(config_.canonical_json);
  manifest["seed"] = config_.seed;
  manifest["method"] = to_string(config_.method);
  if (!manifest.contains("stages") || !manifest["stages"].is_object()) manifest["stages"] = json::object();

  std::uint64_t h = fnv1a64(name);
  h = fnv1a64(params, h);
  h = fnv1a64(kVersion, h);
  for (const auto& in : inputs) {
    if (!fs::exists(in))
      throw DataError("stage " + name + " needs " + in.string() + "; run the stage that produces it first");
    h = fnv1a64(in.filename().string(), h);
    h = fnv1a64(hex64(file_hash(in)), h);
  }
  const std::string input_hash = hex64(h);

  const json& prev = manifest["stages"].contains(name) ? manifest["stages"][name] : json();
  if (prev.is_object() && prev.value("status", "") == "complete" && prev.value("input_hash", "") == input_hash) {
    bool intact = true;
    for (const auto& [rel, digest] : prev.at("outputs").items()) {
      const fs::path p = artifact(rel);
      if (!fs::exists(p) || hex64(file_hash(p)) != digest.get<std::string>()) {
        intact = false;
        break;
      }
    }
    if (intact) {
      log(name + ": inputs unchanged, skipping");
      return {name, true};
    }
  }

  log(name + ": running");
  manifest["stages"][name] = {{"status", "running"}, {"input_hash", input_hash}};
  write_file(manifest_path, manifest.dump(1) + "\n");
  StageResult result;
  try {
    result = fn();
  } catch (const std::exception& e) {
    manifest["stages"][name] = {{"status", "failed"}, {"input_hash", input_hash}, {"error", e.what()}};
    manifest["failed_stage"] = name;
    write_file(manifest_path, manifest.dump(1) + "\n");
    write_file(artifact("FAILED_STAGE"), name + "\n");
    throw;
  }
  json outputs = json::object();
  for (const auto& p : result.outputs) outputs[fs::relative(p, config_.output_dir).generic_string()] = hex64(file_hash(p));
  manifest["stages"][name] = {{"status", "complete"}, {"input_hash", input_hash}, {"outputs", outputs}};
  manifest.erase("failed_stage");
  write_file(manifest_path, manifest.dump(1) + "\n");
  if (fs::exists(artifact("FAILED_STAGE"))) fs::remove(artifact("FAILED_STAGE"));
  return {name, false};
}

StageOutcome Pipeline::run_stage(const std::string& name) {
  const json cfg = json::parse(config_.canonical_json);
  auto section = [&](const char* key) { return cfg.contains(key) ? cfg.at(key).dump() : std::string("{}"); };
  const std::string window = section("window") + section("aggregation");
  const std::string seed = std::to_string(config_.seed);

  if (name == "synth") {
    if (!config_.synth) throw ConfigError("the synth stage needs a synth section in the config");
    return execute(name, {}, section("synth") + seed, [this] { return do_synth(); });
  }
  if (name == "ingest")
    return execute(name, {corpus_source()}, section("corpus"), [this] { return do_ingest(); });
  if (name == "chunk")
    return execute(name, {artifact("documents.jsonl")}, section("perplexity"), [this] { return do_chunk(); });
  if (name == "topics-train")
    return execute(name, {artifact("documents.jsonl"), artifact("chunks_topic.jsonl")}, section("topics") + seed,
                   [this] { return do_topics_train(); });
  if (name == "topics-infer") {
    const fs::path model = config_.topics.model_path ? *config_.topics.model_path : artifact("topic_model.json");
    return execute(name, {model, artifact("chunks_topic.jsonl")}, section("topics") + seed,
                   [this] { return do_topics_infer(); });
  }
  if (name == "perplexity") {
    std::vector<fs::path> in = {artifact("chunks_embedding.jsonl")};
    if (config_.perplexity.backend == PerplexitySection::Backend::external) in.push_back(config_.perplexity.external_path);
    return execute(name, in, section("perplexity") + seed, [this] { return do_perplexity(); });
  }
  if (name == "score") {
    std::vector<fs::path> in = {artifact("documents.jsonl")};
    switch (config_.method) {
      case Method::topics:
        in.push_back(artifact("chunks_topic.jsonl"));
        in.push_back(artifact("features_topics.csv"));
        break;
      case Method::embeddings:
        in.push_back(artifact("chunks_embedding.jsonl"));
        in.push_back(config_.embeddings.path);
        if (config_.embeddings.path.extension() != ".csv") in.push_back(sidecar_path(config_.embeddings.path));
        break;
      case Method::perplexity:
        in.push_back(artifact("chunks_embedding.jsonl"));
        in.push_back(artifact("perplexities.csv"));
        break;
    }
    if (config_.citation_links) in.push_back(*config_.citation_links);
    return execute(name, in, window + section("exclusions") + section("perplexity") + section("method"),
                   [this] { return do_score(); });
  }
  if (name == "regress") {
    std::vector<fs::path> in = {artifact("documents.jsonl")};
    for (const auto& v : variants())
      for (double f : config_.fractions) in.push_back(artifact(doc_scores_name(v, f)));
    return execute(name, in, section("regression") + section("aggregation"), [this] { return do_regress(); });
  }
  if (name == "report") {
    std::vector<fs::path> in = {artifact("documents.jsonl"), artifact("regression.json")};
    for (const auto& v : variants())
      for (double f : config_.fractions) in.push_back(artifact(doc_scores_name(v, f)));
    if (config_.ground_truth) in.push_back(*config_.ground_truth);
    else if (config_.synth) in.push_back(artifact("synth_ground_truth.json"));
    return execute(name, in, section("aggregation"), [this] { return do_report(); });
  }
  throw ConfigError("unknown stage '" + name + "'");
}

Pipeline::StageResult Pipeline::do_synth() {
  const SynthCorpus corpus = generate(*config_.synth);
  write_corpus_jsonl(artifact("synth_corpus.jsonl"), corpus.docs);
  write_ground_truth_json(artifact("synth_ground_truth.json"), corpus.truth);
  log("synth: " + std::to_string(corpus.docs.size()) + " documents, " +
      std::to_string(corpus.truth.innovator_count()) + " innovators");
  return {{artifact("synth_corpus.jsonl"), artifact("synth_ground_truth.json")}};
}

Pipeline::StageResult Pipeline::do_ingest() {
  auto docs = ingest_corpus(corpus_source(), config_.schema);
  if (config_.paratext_fraction > 0.0)
    for (auto& d : docs) d = trim_paratext(d, config_.paratext_fraction);
  write_corpus_jsonl(artifact("documents.jsonl"), docs);
  log("ingest: " + std::to_string(docs.size()) + " documents");
  return {{artifact("documents.jsonl")}};
}

Pipeline::StageResult Pipeline::do_chunk() {
  const auto docs = ingest_corpus(artifact("documents.jsonl"));
  std::vector<std::vector<Chunk>> emb(docs.size()), top(docs.size());
  parallel_for(docs.size(), config_.threads, [&](std::size_t i) {
    emb[i] = chunk_embedding_granularity(docs[i]);
    top[i] = chunk_topic_granularity(emb[i]);
  });
  std::vector<Chunk> embedding, topic;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    std::move(emb[i].begin(), emb[i].end(), std::back_inserter(embedding));
    std::move(top[i].begin(), top[i].end(), std::back_inserter(topic));
  }
  write_chunks_jsonl(artifact("chunks_embedding.jsonl"), embedding);
  write_chunks_csv(artifact("chunks_embedding.csv"), embedding);
  write_chunks_jsonl(artifact("chunks_topic.jsonl"), topic);
  write_chunks_csv(artifact("chunks_topic.csv"), topic);
  const YearRange years = corpus_years(docs);
  const PeriodScheme scheme =
      config_.perplexity.anchor_year
          ? PeriodScheme{config_.perplexity.window_len, config_.perplexity.offset, *config_.perplexity.anchor_year}
          : PeriodScheme::for_corpus(years.first, config_.perplexity.window_len, config_.perplexity.offset);
  write_period_assignments_csv(artifact("period_assignments.csv"), embedding, scheme);
  log("chunk: " + std::to_string(embedding.size()) + " embedding chunks, " + std::to_string(topic.size()) +
      " topic chunks");
  return {{artifact("chunks_embedding.jsonl"), artifact("chunks_embedding.csv"), artifact("chunks_topic.jsonl"),
           artifact("chunks_topic.csv"), artifact("period_assignments.csv")}};
}

Pipeline::StageResult Pipeline::do_topics_train() {
  const auto docs = ingest_corpus(artifact("documents.jsonl"));
  const auto chunks = read_chunks_jsonl(artifact("chunks_topic.jsonl"));
  const auto sample = balanced_subsample(docs, config_.topics.per_year_quota, derive_seed(config_.seed, "subsample"));
  std::unordered_set<std::string> chosen;
  for (const auto& d : sample) chosen.insert(d.doc_id);
  std::vector<Chunk> training;
  for (const auto& c : chunks)
    if (chosen.count(c.doc_id)) training.push_back(c);
  VocabularyOptions vo;
  vo.min_chunk_frequency = config_.topics.min_chunk_frequency;
  log("topics-train: " + std::to_string(training.size()) + " chunks from " + std::to_string(sample.size()) +
      " documents, K=" + std::to_string(config_.topics.lda.num_topics));
  const TopicModelState state = train_topic_model(training, config_.topics.lda, vo);
  save_topic_model(state, artifact("topic_model.json"));
  return {{artifact("topic_model.json")}};
}

Pipeline::StageResult Pipeline::do_topics_infer() {
  const fs::path model_path = config_.topics.model_path ? *config_.topics.model_path : artifact("topic_model.json");
  const TopicModelState state = load_topic_model(model_path);
  const auto chunks = read_chunks_jsonl(artifact("chunks_topic.jsonl"));
  std::vector<InferenceResult> results(chunks.size());
  parallel_for(chunks.size(), config_.threads,
               [&](std::size_t i) { results[i] = infer(state, chunks[i], config_.topics.inference); });
  FeatureStore store(FeatureKind::topic_simplex);
  std::size_t warnings = 0;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (results[i].warning) ++warnings;
    store.add(chunks[i].chunk_id, chunks[i].doc_id, chunks[i].year, std::move(results[i].distribution.probs));
  }
  if (warnings) log("topics-infer: " + std::to_string(warnings) + " chunks had no in-vocabulary tokens");
  write_topic_distributions_csv(artifact("features_topics.csv"), store);
  return {{artifact("features_topics.csv")}};
}

Pipeline::StageResult Pipeline::do_perplexity() {
  const auto chunks = read_chunks_jsonl(artifact("chunks_embedding.jsonl"));
  std::vector<PerplexityRecord> records;
  if (config_.perplexity.backend == PerplexitySection::Backend::external) {
    std::unordered_set<std::string> known;
    for (const auto& c : chunks) known.insert(c.chunk_id);
    auto ingest = ingest_external_perplexities(config_.perplexity.external_path, known);
    std::string rejected = "line,chunk_id,reason\n";
    for (const auto& r : ingest.rejected)
      rejected += std::to_string(r.line) + ',' + csv_escape(r.chunk_id) + ',' + csv_escape(r.reason) + '\n';
    write_file(artifact("perplexity_rejected.csv"), rejected);
    if (!ingest.rejected.empty()) log("perplexity: rejected " + std::to_string(ingest.rejected.size()) + " rows");
    records = std::move(ingest.records);
    write_perplexities_csv(artifact("perplexities.csv"), records);
    return {{artifact("perplexities.csv"), artifact("perplexity_rejected.csv")}};
  }
  YearRange years{chunks.empty() ? 0 : chunks.front().year, chunks.empty() ? 0 : chunks.front().year};
  for (const auto& c : chunks) {
    years.first = std::min(years.first, c.year);
    years.last = std::max(years.last, c.year);
  }
  PerplexityRunOptions opts;
  opts.ngram = config_.perplexity.ngram;
  opts.scheme = config_.perplexity.anchor_year
                    ? PeriodScheme{config_.perplexity.window_len, config_.perplexity.offset, *config_.perplexity.anchor_year}
                    : PeriodScheme::for_corpus(years.first, config_.perplexity.window_len, config_.perplexity.offset);
  opts.corpus = years;
  opts.pooling = config_.perplexity.pooling;
  opts.with_present = config_.perplexity.prescience;
  opts.threads = config_.threads;
  records = compute_perplexities(chunks, opts);
  log("perplexity: " + std::to_string(records.size()) + " chunks evaluated");
  write_perplexities_csv(artifact("perplexities.csv"), records);
  return {{artifact("perplexities.csv")}};
}

Pipeline::StageResult Pipeline::do_score() {
  const auto docs = ingest_corpus(artifact("documents.jsonl"));
  const bool topic_chunks = config_.method == Method::topics;
  const auto chunks = read_chunks_jsonl(artifact(topic_chunks ? "chunks_topic.jsonl" : "chunks_embedding.jsonl"));
  StageResult result;

  std::map<std::string, std::vector<ChunkScore>> chunk_scores;
  if (config_.method == Method::perplexity) {
    const auto records = read_perplexities_csv(artifact("perplexities.csv"));
    chunk_scores["perplexity"] = perplexity_chunk_scores(records, chunks, PerplexityVariant::two_sided);
    if (variants().size() > 1)
      chunk_scores["perplexity_prescience"] = perplexity_chunk_scores(records, chunks, PerplexityVariant::prescience);
  } else {
    FeatureIngest features{FeatureStore(FeatureKind::topic_simplex), "", {}};
    if (topic_chunks) {
      features = read_topic_distributions_csv(artifact("features_topics.csv"), chunks);
    } else {
      features = read_embeddings(config_.embeddings.path, chunks);
      write_embeddings_csv(artifact("features_embeddings.csv"), features.store);
      result.outputs.push_back(artifact("features_embeddings.csv"));
    }
    if (!features.missing_chunk_ids.empty())
      log("score: " + std::to_string(features.missing_chunk_ids.size()) + " chunks have no feature vector");

    std::vector<CitationLink> links;
    if (config_.citation_links) links = read_citation_links(*config_.citation_links);
    const ExclusionSet exclusions = build_exclusions(chunks, links, docs);
    std::size_t flagged = 0;
    for (const auto& [link, ids] : exclusions.excluded_chunks_per_link()) flagged += ids.size();
    json summary = {{"citation_links", links.size()}, {"flagged_chunks", flagged}};
    write_file(artifact("exclusions_summary.json"), summary.dump(1) + "\n");
    result.outputs.push_back(artifact("exclusions_summary.json"));

    WindowConfig window = config_.window;
    const YearRange years = corpus_years(docs);
    if (window.corpus_start == 0 && window.corpus_end == 0) {
      window.corpus_start = years.first;
      window.corpus_end = years.last;
    }
    window.validate();
    ScoringOptions so;
    so.metric = metric_for(features.store.kind());
    so.min_comparisons = config_.min_comparisons;
    so.similar_top_fraction = config_.similar_top_fraction;
    so.threads = config_.threads;
    chunk_scores[variants().front()] = score_corpus(features.store, exclusions, window, so);
  }

  for (const auto& [variant, scores] : chunk_scores) {
    write_chunk_scores_csv(artifact(chunk_scores_name(variant)), scores, variant);
    result.outputs.push_back(artifact(chunk_scores_name(variant)));
    std::size_t scored = std::count_if(scores.begin(), scores.end(), [](const ChunkScore& s) { return s.scored(); });
    for (double f : config_.fractions) {
      AggregationSpec spec{f, config_.novelty_from_all_chunks};
      const auto doc_scores = aggregate_documents(scores, spec);
      write_doc_scores_csv(artifact(doc_scores_name(variant, f)), doc_scores, variant);
      result.outputs.push_back(artifact(doc_scores_name(variant, f)));
    }
    log("score: " + variant + ": " + std::to_string(scored) + " of " + std::to_string(scores.size()) +
        " chunks scored");
  }
  return result;
}

Pipeline::StageResult Pipeline::do_regress() {
  const auto docs = ingest_corpus(artifact("documents.jsonl"));
  std::map<std::pair<std::string, double>, std::vector<DocScore>> tables;
  for (const auto& v : variants())
    for (double f : config_.fractions) tables[{v, f}] = read_doc_scores_csv(artifact(doc_scores_name(v, f)));

  if (config_.regression.align_rows) {
    // Keep only documents scored in every table and carrying every response.
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& [key, t] : tables)
      for (const auto& s : t)
        if (s.scored) ++seen[s.doc_id];
    std::unordered_set<std::string> keep;
    for (const auto& d : docs) {
      auto it = seen.find(d.doc_id);
      if (it == seen.end() || it->second != tables.size()) continue;
      bool complete = true;
      for (Response r : config_.regression.responses) {
        if (r == Response::citation_count && !d.citation_count) complete = false;
        if (r == Response::author_age && !d.author_birth_year) complete = false;
        if (r == Response::discussed_flag && !d.discussed_flag) complete = false;
      }
      if (complete) keep.insert(d.doc_id);
    }
    for (auto& [key, t] : tables)
      std::erase_if(t, [&](const DocScore& s) { return !keep.count(s.doc_id); });
  }

  std::string csv = "method,fraction,response,r_squared,n,dropped_rows\n";
  json fits = json::array();
  json skipped = json::array();
  for (const auto& [key, t] : tables) {
    for (Response r : config_.regression.responses) {
      RegressionSpec spec{r, config_.regression.transform};
      try {
        const RegressionResult fit = fit_precocity_model(t, docs, spec);
        csv += key.first + ',' + format_fraction(key.second) + ',' + std::string(to_string(r)) + ',' +
               format_real(fit.r_squared) + ',' + std::to_string(fit.n) + ',' + std::to_string(fit.dropped_rows) + '\n';
        fits.push_back({{"method", key.first},
                        {"fraction", key.second},
                        {"response", to_string(r)},
                        {"transform", config_.regression.transform == ResponseTransform::log1p ? "log1p" : "raw"},
                        {"r_squared", fit.r_squared},
                        {"n", fit.n},
                        {"dropped_rows", fit.dropped_rows},
                        {"intercept", fit.intercept},
                        {"coefficients", fit.coefficients}});
      } catch (const ComputeError& e) {
        // A response missing from most documents is a property of the
        // corpus, not a pipeline failure.
        const std::string what = e.what();
        if (what.find("usable rows") == std::string::npos) throw;
        skipped.push_back({{"method", key.first}, {"fraction", key.second}, {"response", to_string(r)}, {"reason", what}});
        log("regress: skipped " + key.first + " f=" + format_fraction(key.second) + " " + std::string(to_string(r)) +
            ": " + what);
      }
    }
  }
  write_file(artifact("regression.csv"), csv);
  json out = {{"config_hash", hex64(config_.hash())}, {"fits", fits}, {"skipped", skipped}};
  write_file(artifact("regression.json"), out.dump(1) + "\n");
  StageResult result{{artifact("regression.csv"), artifact("regression.json")}};

  const double primary = config_.fractions.front();
  for (const auto& v : variants()) {
    const auto& t = tables.at({v, primary});
    try {
      const auto groups = summarize_groups(t, docs, config_.regression.group_field);
      write_group_summaries_csv(artifact("group_summaries_" + v + ".csv"), groups);
      result.outputs.push_back(artifact("group_summaries_" + v + ".csv"));
    } catch (const ComputeError& e) {
      log("regress: no group summary for " + v + ": " + e.what());
    }
  }
  return result;
}

Pipeline::StageResult Pipeline::do_report() {
  const auto docs = ingest_corpus(artifact("documents.jsonl"));
  const json regression = json::parse(read_file(artifact("regression.json")));
  std::optional<GroundTruth> truth;
  if (config_.ground_truth) truth = read_ground_truth_json(*config_.ground_truth);
  else if (config_.synth) truth = read_ground_truth_json(artifact("synth_ground_truth.json"));

  json report = {{"config_hash", hex64(config_.hash())},
                 {"tool_version", kVersion},
                 {"method", to_string(config_.method)},
                 {"documents", docs.size()}};
  std::string text = "precocity report\nconfig hash " + hex64(config_.hash()) + "\nmethod " +
                     std::string(to_string(config_.method)) + ", " + std::to_string(docs.size()) + " documents\n\n";
  json variants_json = json::object();
  for (const auto& v : variants()) {
    std::vector<DocScore> all;
    json per = json::object();
    for (double f : config_.fractions) {
      const auto t = read_doc_scores_csv(artifact(doc_scores_name(v, f)));
      per[format_fraction(f)] = {{"scored_documents", t.size()}};
      text += v + " fraction " + format_fraction(f) + ": " + std::to_string(t.size()) + " scored documents\n";
      all.insert(all.end(), t.begin(), t.end());
    }
    json entry = {{"fractions", per}};
    if (truth) {
      const SynthEvaluation ev = evaluate(all, *truth, config_.fractions.front());
      entry["evaluation"] = {{"fraction", ev.fraction},
                             {"auc", ev.auc},
                             {"spearman", ev.spearman},
                             {"n_docs", ev.n_docs},
                             {"n_innovators", ev.n_innovators}};
      text += v + " vs ground truth: auc " + format_fraction(ev.auc) + ", spearman " + format_fraction(ev.spearman);
      if (ev.top_quartile_gain) {
        entry["evaluation"]["top_quartile_gain"] = *ev.top_quartile_gain;
        text += ", top-quartile gain " + format_fraction(*ev.top_quartile_gain);
      }
      text += '\n';
    }
    variants_json[v] = entry;
  }
  report["variants"] = variants_json;
  report["regression"] = regression.at("fits");
  text += "\nmethod,fraction,response,r_squared,n\n";
  for (const auto& f : regression.at("fits")) {
    text += f.at("method").get<std::string>() + ',' + format_fraction(f.at("fraction").get<double>()) + ',' +
            f.at("response").get<std::string>() + ',' + format_fraction(f.at("r_squared").get<double>()) + ',' +
            std::to_string(f.at("n").get<std::size_t>()) + '\n';
  }
  write_file(artifact("report.json"), report.dump(1) + "\n");
  write_file(artifact("report.txt"), text);
  return {{artifact("report.json"), artifact("report.txt")}};
}

}  // namespace precocity
