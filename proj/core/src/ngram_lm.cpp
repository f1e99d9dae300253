#include "precocity/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "json.hpp"
#include "precocity/error.hpp"
#include "precocity/parallel.hpp"
#include "precocity/table_io.hpp"
#include "precocity/tokenizer.hpp"

namespace precocity {
namespace {

constexpr const char* kLmFormat = "precocity.ngram_lm";
constexpr int kLmFormatVersion = 1;

std::vector<std::vector<std::string>> sentences_of(const Chunk& chunk) {
  std::vector<std::vector<std::string>> out;
  auto take = [&](std::size_t b, std::size_t e) {
    std::vector<std::string> s;
    s.reserve(e - b);
    for (std::size_t i = b; i < e; ++i) s.push_back(normalize_token(chunk.tokens[i]));
    if (!s.empty()) out.push_back(std::move(s));
  };
  if (chunk.sentence_spans.empty()) {
    take(0, chunk.tokens.size());
  } else {
    for (auto [b, e] : chunk.sentence_spans) take(b, std::min(e, chunk.tokens.size()));
  }
  return out;
}

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DataError(std::string(what) + " must be a positive finite number");
}

}  // namespace

std::string_view to_string(Smoothing s) {
  return s == Smoothing::add_k ? "add_k" : "interpolated_kneser_ney";
}

Smoothing smoothing_from_string(std::string_view s) {
  if (s == "add_k") return Smoothing::add_k;
  if (s == "interpolated_kneser_ney" || s == "kneser_ney" || s == "kn")
    return Smoothing::interpolated_kneser_ney;
  throw ConfigError("unknown smoothing '" + std::string(s) + "'");
}

std::uint64_t NgramModel::pack(std::span<const std::int32_t> ids) const {
  std::uint64_t key = 0;
  for (std::int32_t id : ids) key = (key << bits_) | static_cast<std::uint64_t>(id);
  return key;
}

std::int32_t NgramModel::id(const std::string& normalized_word) const {
  auto it = index_.find(normalized_word);
  return it == index_.end() ? kUnk : it->second;
}

void NgramModel::finalize_levels() {
  // Lower levels of a Kneser-Ney model hold continuation counts: the number
  // of distinct words seen immediately before each (n-1)-gram.
  if (smoothing_ == Smoothing::interpolated_kneser_ney) {
    for (int n = order_ - 1; n >= 1; --n) {
      auto& lower = levels_[static_cast<std::size_t>(n - 1)].counts;
      lower.clear();
      const std::uint64_t mask = n * bits_ >= 64 ? ~0ULL : ((1ULL << (n * bits_)) - 1);
      for (const auto& [key, c] : levels_[static_cast<std::size_t>(n)].counts) {
        if (c > 0) lower[key & mask] += 1.0;
      }
    }
  }
  for (auto& level : levels_) {
    level.context_total.clear();
    level.context_types.clear();
    for (const auto& [key, c] : level.counts) {
      const std::uint64_t ctx = key >> bits_;
      level.context_total[ctx] += c;
      level.context_types[ctx] += 1.0;
    }
  }
}

NgramModel NgramModel::train(std::span<const Chunk> chunks, const YearRange& range, const NgramOptions& opts) {
  if (opts.order < 1) throw ConfigError("n-gram order must be >= 1");
  if (!(opts.k > 0.0)) throw ConfigError("add-k constant must be positive");
  if (!(opts.discount > 0.0 && opts.discount < 1.0)) throw ConfigError("Kneser-Ney discount must lie in (0, 1)");

  std::vector<std::vector<std::string>> sentences;
  for (const auto& c : chunks) {
    if (!range.contains(c.year)) continue;
    for (auto& s : sentences_of(c)) sentences.push_back(std::move(s));
  }
  if (sentences.empty())
    throw DataError("no training text for language-model range " + std::to_string(range.first) + "-" +
                    std::to_string(range.last));

  NgramModel m;
  m.order_ = opts.order;
  m.smoothing_ = opts.smoothing;
  m.k_ = opts.k;
  m.discount_ = opts.discount;
  m.seed_ = opts.seed;
  m.range_ = range;

  std::map<std::string, std::size_t> freq;
  for (const auto& s : sentences)
    for (const auto& w : s) ++freq[w];
  m.words_ = {"<unk>", "<s>"};
  for (const auto& [w, f] : freq) {
    if (f >= 2 && w != "<unk>" && w != "<s>") m.words_.push_back(w);
  }
  for (std::size_t i = 0; i < m.words_.size(); ++i) m.index_[m.words_[i]] = static_cast<std::int32_t>(i);

  int bits = 1;
  while ((std::uint64_t{1} << bits) < m.words_.size()) ++bits;
  if (bits * m.order_ > 64)
    throw ConfigError("vocabulary of " + std::to_string(m.words_.size()) + " words is too large for order " +
                      std::to_string(m.order_));
  m.bits_ = bits;
  m.levels_.assign(static_cast<std::size_t>(m.order_), Level{});

  std::vector<std::int32_t> seq;
  auto& top = m.levels_.back().counts;
  const auto N = static_cast<std::size_t>(m.order_);
  for (const auto& s : sentences) {
    seq.assign(N - 1, kBos);
    for (const auto& w : s) seq.push_back(m.id(w));
    for (std::size_t i = N - 1; i < seq.size(); ++i)
      top[m.pack(std::span<const std::int32_t>(seq).subspan(i + 1 - N, N))] += 1.0;
  }
  m.finalize_levels();
  return m;
}

double NgramModel::kn_probability(std::span<const std::int32_t> context, std::int32_t word, int n) const {
  if (n == 0) return 1.0 / static_cast<double>(event_count());
  const double lower = kn_probability(context, word, n - 1);
  const auto ctx = context.subspan(context.size() - static_cast<std::size_t>(n - 1));
  const Level& level = levels_[static_cast<std::size_t>(n - 1)];
  const std::uint64_t ctx_key = pack(ctx);
  auto total = level.context_total.find(ctx_key);
  if (total == level.context_total.end()) return lower;
  const std::uint64_t key = (ctx_key << bits_) | static_cast<std::uint64_t>(word);
  auto c = level.counts.find(key);
  const double count = c == level.counts.end() ? 0.0 : c->second;
  const double types = level.context_types.at(ctx_key);
  return std::max(count - discount_, 0.0) / total->second + discount_ * types / total->second * lower;
}

double NgramModel::probability(std::span<const std::int32_t> context, std::int32_t word) const {
  if (word == kBos) return 0.0;
  const auto need = static_cast<std::size_t>(order_ - 1);
  std::vector<std::int32_t> ctx(need, kBos);
  const std::size_t have = std::min(need, context.size());
  std::copy(context.end() - static_cast<std::ptrdiff_t>(have), context.end(),
            ctx.end() - static_cast<std::ptrdiff_t>(have));

  if (smoothing_ == Smoothing::interpolated_kneser_ney) return kn_probability(ctx, word, order_);

  const Level& level = levels_.back();
  const std::uint64_t ctx_key = pack(ctx);
  const std::uint64_t key = (ctx_key << bits_) | static_cast<std::uint64_t>(word);
  auto c = level.counts.find(key);
  auto t = level.context_total.find(ctx_key);
  const double count = c == level.counts.end() ? 0.0 : c->second;
  const double total = t == level.context_total.end() ? 0.0 : t->second;
  return (count + k_) / (total + k_ * static_cast<double>(event_count()));
}

double NgramModel::sentence_log_prob(std::span<const std::string> tokens) const {
  const auto need = static_cast<std::size_t>(order_ - 1);
  std::vector<std::int32_t> seq(need, kBos);
  for (const auto& t : tokens) seq.push_back(id(t));
  double lp = 0.0;
  for (std::size_t i = need; i < seq.size(); ++i) {
    lp += std::log(probability(std::span<const std::int32_t>(seq).subspan(i - need, need), seq[i]));
  }
  return lp;
}

std::string NgramModel::to_json() const {
  using nlohmann::json;
  json j;
  j["format"] = kLmFormat;
  j["version"] = kLmFormatVersion;
  j["order"] = order_;
  j["smoothing"] = std::string(to_string(smoothing_));
  j["k"] = k_;
  j["discount"] = discount_;
  j["seed"] = seed_;
  j["training_range"] = {range_.first, range_.last};
  j["vocabulary"] = words_;
  // Only the full-order counts are stored; everything else is derived.
  std::vector<std::pair<std::uint64_t, double>> top(levels_.back().counts.begin(), levels_.back().counts.end());
  std::sort(top.begin(), top.end());
  json counts = json::array();
  for (const auto& [key, c] : top) counts.push_back({key, c});
  j["counts"] = std::move(counts);
  return j.dump();
}

void NgramModel::save(const std::filesystem::path& path) const { write_file(path, to_json()); }

NgramModel NgramModel::load(const std::filesystem::path& path) {
  using nlohmann::json;
  try {
    const json j = json::parse(read_file(path));
    if (j.at("format").get<std::string>() != kLmFormat) throw DataError(path.string() + ": not an n-gram model");
    if (j.at("version").get<int>() != kLmFormatVersion)
      throw DataError(path.string() + ": unsupported n-gram model version");
    NgramModel m;
    m.order_ = j.at("order").get<int>();
    m.smoothing_ = smoothing_from_string(j.at("smoothing").get<std::string>());
    m.k_ = j.at("k").get<double>();
    m.discount_ = j.at("discount").get<double>();
    m.seed_ = j.at("seed").get<std::uint64_t>();
    m.range_ = {j.at("training_range").at(0).get<int>(), j.at("training_range").at(1).get<int>()};
    m.words_ = j.at("vocabulary").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < m.words_.size(); ++i) m.index_[m.words_[i]] = static_cast<std::int32_t>(i);
    int bits = 1;
    while ((std::uint64_t{1} << bits) < m.words_.size()) ++bits;
    m.bits_ = bits;
    m.levels_.assign(static_cast<std::size_t>(m.order_), Level{});
    for (const auto& e : j.at("counts"))
      m.levels_.back().counts[e.at(0).get<std::uint64_t>()] = e.at(1).get<double>();
    m.finalize_levels();
    return m;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed n-gram model: " + e.what());
  }
}

double perplexity(const NgramModel& model, const Chunk& chunk, PerplexityPooling pooling) {
  const auto sentences = sentences_of(chunk);
  if (sentences.empty()) throw DataError("perplexity: chunk " + chunk.chunk_id + " has no tokens");
  double sum_ppl = 0.0, sum_lp = 0.0;
  std::size_t n_tokens = 0;
  for (const auto& s : sentences) {
    const double lp = model.sentence_log_prob(s);
    sum_ppl += std::exp(-lp / static_cast<double>(s.size()));
    sum_lp += lp;
    n_tokens += s.size();
  }
  if (pooling == PerplexityPooling::token_pooled) return std::exp(-sum_lp / static_cast<double>(n_tokens));
  return sum_ppl / static_cast<double>(sentences.size());
}

double perplexity_precocity(double perplexity_past, double perplexity_future) {
  require_positive(perplexity_past, "perplexity_past");
  require_positive(perplexity_future, "perplexity_future");
  return 2.0 * (perplexity_past - perplexity_future) / (perplexity_past + perplexity_future);
}

double perplexity_prescience(double perplexity_present, double perplexity_future) {
  require_positive(perplexity_present, "perplexity_present");
  require_positive(perplexity_future, "perplexity_future");
  return (perplexity_present - perplexity_future) / perplexity_present;
}

PerplexityIngest ingest_external_perplexities(const std::filesystem::path& path,
                                              const std::unordered_set<std::string>& known_chunk_ids) {
  const CsvTable t = read_csv(path);
  const auto c_id = t.column("chunk_id");
  const auto c_past = t.column("perplexity_past");
  const auto c_future = t.column("perplexity_future");
  PerplexityIngest out;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    const std::string id = c_id < row.size() ? row[c_id] : std::string{};
    auto reject = [&](std::string reason) { out.rejected.push_back({line, id, std::move(reason)}); };
    if (row.size() != t.header.size()) {
      reject("wrong field count");
      continue;
    }
    if (!known_chunk_ids.count(id)) {
      reject("unknown chunk_id '" + id + "'");
      continue;
    }
    double past = 0.0, future = 0.0;
    try {
      std::size_t used = 0;
      past = std::stod(row[c_past], &used);
      if (used != row[c_past].size()) throw std::invalid_argument("trailing");
      future = std::stod(row[c_future], &used);
      if (used != row[c_future].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      reject("unparsable perplexity value");
      continue;
    }
    if (!(past > 0.0) || !std::isfinite(past) || !(future > 0.0) || !std::isfinite(future)) {
      reject("perplexities must be positive and finite");
      continue;
    }
    if (!seen.insert(id).second) {
      reject("duplicate chunk_id '" + id + "'");
      continue;
    }
    out.records.push_back({id, past, future, PerplexityBackend::external, std::nullopt});
  }
  return out;
}

void write_perplexities_csv(const std::filesystem::path& path, std::span<const PerplexityRecord> records) {
  bool present = std::any_of(records.begin(), records.end(),
                             [](const PerplexityRecord& r) { return r.perplexity_present.has_value(); });
  std::string out = present ? "chunk_id,perplexity_past,perplexity_future,perplexity_present,backend\n"
                            : "chunk_id,perplexity_past,perplexity_future,backend\n";
  for (const auto& r : records) {
    out += csv_escape(r.chunk_id) + ',' + format_real(r.perplexity_past) + ',' + format_real(r.perplexity_future);
    if (present) out += ',' + (r.perplexity_present ? format_real(*r.perplexity_present) : std::string{});
    out += r.backend == PerplexityBackend::builtin_ngram ? ",builtin_ngram\n" : ",external\n";
  }
  write_file(path, out);
}

std::vector<PerplexityRecord> compute_perplexities(std::span<const Chunk> chunks, const PerplexityRunOptions& opts) {
  opts.scheme.validate();
  std::vector<std::size_t> eligible;
  std::set<std::pair<int, int>> needed;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto p = perplexity_periods(chunks[i].year, opts.scheme);
    if (!opts.corpus.contains(p.past) || !opts.corpus.contains(p.future)) continue;
    if (opts.with_present && !opts.corpus.contains(p.present)) continue;
    eligible.push_back(i);
    needed.emplace(p.past.first, p.past.last);
    needed.emplace(p.future.first, p.future.last);
    if (opts.with_present) needed.emplace(p.present.first, p.present.last);
  }

  std::vector<PerplexityRecord> records(eligible.size());
  for (std::size_t e = 0; e < eligible.size(); ++e) {
    records[e].chunk_id = chunks[eligible[e]].chunk_id;
    records[e].backend = PerplexityBackend::builtin_ngram;
  }
  // One period model alive at a time: train it, evaluate every chunk that
  // uses it in any role, release it.
  for (const auto& [first, last] : needed) {
    const YearRange range{first, last};
    const NgramModel model = NgramModel::train(chunks, range, opts.ngram);
    parallel_for(eligible.size(), opts.threads, [&](std::size_t e) {
      const Chunk& c = chunks[eligible[e]];
      const auto p = perplexity_periods(c.year, opts.scheme);
      const bool as_past = p.past == range;
      const bool as_future = p.future == range;
      const bool as_present = opts.with_present && p.present == range;
      if (!as_past && !as_future && !as_present) return;
      const double value = perplexity(model, c, opts.pooling);
      PerplexityRecord& r = records[e];
      if (as_past) r.perplexity_past = value;
      if (as_future) r.perplexity_future = value;
      if (as_present) r.perplexity_present = value;
    });
  }
  return records;
}

std::vector<ChunkScore> perplexity_chunk_scores(std::span<const PerplexityRecord> records,
                                                std::span<const Chunk> chunks, PerplexityVariant variant) {
  std::unordered_map<std::string, const Chunk*> by_id;
  for (const auto& c : chunks) by_id[c.chunk_id] = &c;
  std::vector<ChunkScore> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto it = by_id.find(r.chunk_id);
    if (it == by_id.end()) throw DataError("perplexity record for unknown chunk " + r.chunk_id);
    ChunkScore s;
    s.chunk_id = r.chunk_id;
    s.doc_id = it->second->doc_id;
    s.year = it->second->year;
    s.transience = r.perplexity_future;
    if (variant == PerplexityVariant::two_sided) {
      s.novelty = r.perplexity_past;
      s.precocity = perplexity_precocity(r.perplexity_past, r.perplexity_future);
    } else {
      if (!r.perplexity_present)
        throw ConfigError("prescience needs present-period perplexities (chunk " + r.chunk_id + ")");
      s.novelty = *r.perplexity_present;
      s.precocity = perplexity_prescience(*r.perplexity_present, r.perplexity_future);
    }
    s.status = ScoreStatus::scored;
    out.push_back(std::move(s));
  }
  return out;
}

void write_period_assignments_csv(const std::filesystem::path& path, std::span<const Chunk> chunks,
                                  const PeriodScheme& scheme) {
  std::string out = "chunk_id,doc_id,year,bucket_start,bucket_end,past_start,past_end,future_start,future_end\n";
  for (const auto& c : chunks) {
    const auto p = perplexity_periods(c.year, scheme);
    out += csv_escape(c.chunk_id) + ',' + csv_escape(c.doc_id) + ',' + std::to_string(c.year) + ',' +
           std::to_string(p.bucket.first) + ',' + std::to_string(p.bucket.last) + ',' +
           std::to_string(p.past.first) + ',' + std::to_string(p.past.last) + ',' +
           std::to_string(p.future.first) + ',' + std::to_string(p.future.last) + '\n';
  }
  write_file(path, out);
}

}  // namespace precocity
