#include "precocity/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "precocity/error.hpp"
#include "precocity/parallel.hpp"
#include "precocity/table_io.hpp"

namespace precocity {
namespace {

ChunkScore finish(ChunkScore s, double past_sum, double future_sum, int min_comparisons) {
  if (s.n_past < static_cast<std::size_t>(min_comparisons)) {
    s.status = ScoreStatus::insufficient_past;
    return s;
  }
  if (s.n_future < static_cast<std::size_t>(min_comparisons)) {
    s.status = ScoreStatus::insufficient_future;
    return s;
  }
  s.novelty = past_sum / static_cast<double>(s.n_past);
  s.transience = future_sum / static_cast<double>(s.n_future);
  s.precocity = s.novelty - s.transience;
  s.status = ScoreStatus::scored;
  return s;
}

std::vector<double> eligible_divergences(const FeatureVector& target, std::span<const FeatureVector> side,
                                         Metric metric, const ExclusionSet& exclusions) {
  std::vector<double> out;
  out.reserve(side.size());
  for (const auto& other : side) {
    if (other.kind != target.kind) throw DataError("score_chunk: mixed feature kinds");
    if (!exclusions.empty() && exclusions.excluded(target.chunk_id, other.chunk_id)) continue;
    out.push_back(divergence(metric, target.values, other.values));
  }
  return out;
}

// Sum of the m smallest values; `values` is reordered.
double sum_smallest(std::vector<double>& values, std::size_t m) {
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(m - 1), values.end());
  std::sort(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(m));
  return std::accumulate(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(m), 0.0);
}

}  // namespace

std::string_view to_string(ScoreStatus status) {
  switch (status) {
    case ScoreStatus::scored: return "scored";
    case ScoreStatus::not_central: return "not_central";
    case ScoreStatus::insufficient_past: return "insufficient_past";
    case ScoreStatus::insufficient_future: return "insufficient_future";
  }
  return "unknown";
}

std::size_t top_count(double fraction, std::size_t n) {
  if (!(fraction > 0.0) || fraction > 1.0) throw ConfigError("fraction must lie in (0, 1]");
  if (n == 0) return 0;
  const double raw = fraction * static_cast<double>(n);
  auto m = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(m, 1, n);
}

ChunkScore score_chunk(const FeatureVector& target, std::span<const FeatureVector> past,
                       std::span<const FeatureVector> future, Metric metric,
                       const ExclusionSet& exclusions, int min_comparisons) {
  const auto p = eligible_divergences(target, past, metric, exclusions);
  const auto f = eligible_divergences(target, future, metric, exclusions);
  ChunkScore s;
  s.chunk_id = target.chunk_id;
  s.n_past = p.size();
  s.n_future = f.size();
  return finish(std::move(s), std::accumulate(p.begin(), p.end(), 0.0),
                std::accumulate(f.begin(), f.end(), 0.0), min_comparisons);
}

ChunkScore score_chunk_similar_subset(const FeatureVector& target, std::span<const FeatureVector> past,
                                      std::span<const FeatureVector> future, Metric metric,
                                      const ExclusionSet& exclusions, double top_fraction,
                                      int min_comparisons) {
  auto p = eligible_divergences(target, past, metric, exclusions);
  auto f = eligible_divergences(target, future, metric, exclusions);
  ChunkScore s;
  s.chunk_id = target.chunk_id;
  if (p.size() < static_cast<std::size_t>(min_comparisons) ||
      f.size() < static_cast<std::size_t>(min_comparisons)) {
    s.n_past = p.size();
    s.n_future = f.size();
    return finish(std::move(s), 0.0, 0.0, min_comparisons);
  }
  const std::size_t mp = top_count(top_fraction, p.size());
  const std::size_t mf = top_count(top_fraction, f.size());
  const double ps = sum_smallest(p, mp);
  const double fs = sum_smallest(f, mf);
  s.n_past = mp;
  s.n_future = mf;
  return finish(std::move(s), ps, fs, 1);
}

FeatureVector FeatureStore::vector(std::size_t i) const {
  auto v = values(i);
  return {chunk_ids_[i], kind_, std::vector<double>(v.begin(), v.end())};
}

std::optional<std::size_t> FeatureStore::find(std::string_view chunk_id) const {
  for (std::size_t i = 0; i < chunk_ids_.size(); ++i) {
    if (chunk_ids_[i] == chunk_id) return i;
  }
  return std::nullopt;
}

void FeatureStore::add(std::string chunk_id, std::string doc_id, int year, std::vector<double> values) {
  FeatureVector probe{chunk_id, kind_, std::move(values)};
  validate(probe);
  if (chunk_ids_.empty()) {
    dim_ = probe.values.size();
  } else if (probe.values.size() != dim_) {
    throw DataError("feature vector for " + chunk_id + " has dimension " +
                    std::to_string(probe.values.size()) + ", expected " + std::to_string(dim_));
  }
  chunk_ids_.push_back(std::move(chunk_id));
  doc_ids_.push_back(std::move(doc_id));
  years_.push_back(year);
  values_.insert(values_.end(), probe.values.begin(), probe.values.end());
}

std::vector<ChunkScore> score_corpus(const FeatureStore& store, const ExclusionSet& exclusions,
                                     const WindowConfig& window, const ScoringOptions& opts) {
  window.validate();
  if (opts.metric != metric_for(store.kind()))
    throw ConfigError("metric " + std::string(to_string(opts.metric)) + " does not match feature kind " +
                      std::string(to_string(store.kind())));
  if (opts.similar_top_fraction && !(*opts.similar_top_fraction > 0.0 && *opts.similar_top_fraction <= 1.0))
    throw ConfigError("similar_top_fraction must lie in (0, 1]");

  const std::size_t n = store.size();
  const std::size_t dim = store.dimension();

  // Year-partitioned layout: rows sorted by (year, store index).
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return store.year(a) < store.year(b); });
  std::vector<std::size_t> row_of(n);
  for (std::size_t r = 0; r < n; ++r) row_of[order[r]] = r;
  std::map<int, std::pair<std::size_t, std::size_t>> blocks;  // year -> [begin, end) rows
  for (std::size_t r = 0; r < n; ++r) {
    const int y = store.year(order[r]);
    auto [it, inserted] = blocks.try_emplace(y, r, r + 1);
    if (!inserted) it->second.second = r + 1;
  }

  // KL: rows hold the floored simplex and its log; cosine: unit vectors.
  std::vector<double> primary(n * dim), logs;
  std::vector<double> self_term(n, 0.0);
  if (opts.metric == Metric::kl) logs.resize(n * dim);
  for (std::size_t r = 0; r < n; ++r) {
    const auto v = store.values(order[r]);
    double* out = &primary[r * dim];
    if (opts.metric == Metric::kl) {
      const auto floored = floor_simplex(v);
      double h = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        out[k] = floored[k];
        logs[r * dim + k] = std::log(floored[k]);
        h += floored[k] * logs[r * dim + k];
      }
      self_term[r] = h;
    } else {
      double norm2 = 0.0;
      for (double x : v) norm2 += x * x;
      const double inv = 1.0 / std::sqrt(norm2);
      for (std::size_t k = 0; k < dim; ++k) out[k] = v[k] * inv;
    }
  }

  std::unordered_map<std::string, std::vector<std::size_t>> rows_by_doc;
  std::unordered_map<std::string, std::size_t> row_by_chunk;
  if (!exclusions.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      rows_by_doc[store.doc_id(i)].push_back(row_of[i]);
      row_by_chunk.emplace(store.chunk_id(i), row_of[i]);
    }
  }

  auto div = [&](std::size_t target_row, std::size_t other_row) {
    const double* a = &primary[target_row * dim];
    if (opts.metric == Metric::kl) {
      const double* lq = &logs[other_row * dim];
      double cross = 0.0;
      for (std::size_t k = 0; k < dim; ++k) cross += a[k] * lq[k];
      const double kl = self_term[target_row] - cross;
      return kl < 0.0 ? 0.0 : kl;
    }
    const double* b = &primary[other_row * dim];
    double dot = 0.0;
    for (std::size_t k = 0; k < dim; ++k) dot += a[k] * b[k];
    return std::clamp(1.0 - dot, 0.0, 2.0);
  };

  std::vector<ChunkScore> results(n);
  parallel_for(n, opts.threads, [&](std::size_t i) {
    ChunkScore& s = results[i];
    s.chunk_id = store.chunk_id(i);
    s.doc_id = store.doc_id(i);
    s.year = store.year(i);
    if (opts.central_only && !is_central(s.year, window)) {
      s.status = ScoreStatus::not_central;
      return;
    }
    const std::size_t target = row_of[i];

    std::vector<std::size_t> skip;
    if (!exclusions.empty()) {
      for (const auto& doc : exclusions.excluded_docs(s.chunk_id)) {
        if (auto it = rows_by_doc.find(doc); it != rows_by_doc.end())
          skip.insert(skip.end(), it->second.begin(), it->second.end());
      }
      for (const auto& chunk : exclusions.chunks_flagged_against(s.doc_id)) {
        if (auto it = row_by_chunk.find(chunk); it != row_by_chunk.end()) skip.push_back(it->second);
      }
      std::sort(skip.begin(), skip.end());
      skip.erase(std::unique(skip.begin(), skip.end()), skip.end());
    }
    auto skipped = [&](std::size_t row) {
      return !skip.empty() && std::binary_search(skip.begin(), skip.end(), row);
    };

    const ComparisonWindow w = comparison_window(s.year, window);
    std::vector<double> collected;
    auto stream = [&](const YearRange& range, double& sum, std::size_t& count) {
      collected.clear();
      for (auto it = blocks.lower_bound(range.first); it != blocks.end() && it->first <= range.last; ++it) {
        for (std::size_t r = it->second.first; r < it->second.second; ++r) {
          if (skipped(r)) continue;
          const double d = div(target, r);
          if (opts.similar_top_fraction) {
            collected.push_back(d);
          } else {
            sum += d;
          }
          ++count;
        }
      }
    };

    double past_sum = 0.0, future_sum = 0.0;
    std::size_t n_past = 0, n_future = 0;
    stream(w.past, past_sum, n_past);
    std::vector<double> past_values;
    if (opts.similar_top_fraction) past_values.swap(collected);
    stream(w.future, future_sum, n_future);
    s.n_past = n_past;
    s.n_future = n_future;

    const int min_c = opts.min_comparisons;
    if (opts.similar_top_fraction && n_past >= static_cast<std::size_t>(min_c) &&
        n_future >= static_cast<std::size_t>(min_c)) {
      const std::size_t mp = top_count(*opts.similar_top_fraction, n_past);
      const std::size_t mf = top_count(*opts.similar_top_fraction, n_future);
      past_sum = sum_smallest(past_values, mp);
      future_sum = sum_smallest(collected, mf);
      s.n_past = mp;
      s.n_future = mf;
      s = finish(std::move(s), past_sum, future_sum, 1);
      return;
    }
    s = finish(std::move(s), past_sum, future_sum, min_c);
  });
  return results;
}

DocScore aggregate_document(std::span<const ChunkScore> chunk_scores, const AggregationSpec& spec) {
  DocScore d;
  d.fraction = spec.fraction;
  if (!chunk_scores.empty()) {
    d.doc_id = chunk_scores.front().doc_id;
    d.year = chunk_scores.front().year;
  }
  std::vector<const ChunkScore*> scored;
  for (const auto& c : chunk_scores) {
    if (c.scored()) scored.push_back(&c);
  }
  d.n_chunks = scored.size();
  if (scored.empty()) {
    d.reason = "no_scored_chunks";
    return d;
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ChunkScore* a, const ChunkScore* b) { return a->precocity > b->precocity; });
  const std::size_t m = top_count(spec.fraction, scored.size());
  double p = 0.0, nov = 0.0, tr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    p += scored[i]->precocity;
    nov += scored[i]->novelty;
    tr += scored[i]->transience;
  }
  d.precocity = p / static_cast<double>(m);
  d.novelty = nov / static_cast<double>(m);
  d.transience = tr / static_cast<double>(m);
  if (spec.novelty_from_all_chunks) {
    nov = tr = 0.0;
    for (const auto* c : scored) {
      nov += c->novelty;
      tr += c->transience;
    }
    d.novelty = nov / static_cast<double>(scored.size());
    d.transience = tr / static_cast<double>(scored.size());
  }
  d.n_selected = m;
  d.scored = true;
  return d;
}

std::vector<DocScore> aggregate_documents(std::span<const ChunkScore> chunk_scores,
                                          const AggregationSpec& spec) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<ChunkScore>> groups;
  for (const auto& c : chunk_scores) {
    auto [it, inserted] = groups.try_emplace(c.doc_id);
    if (inserted) order.push_back(c.doc_id);
    it->second.push_back(c);
  }
  std::vector<DocScore> out;
  out.reserve(order.size());
  for (const auto& id : order) out.push_back(aggregate_document(groups[id], spec));
  return out;
}

void write_chunk_scores_csv(const std::filesystem::path& path, std::span<const ChunkScore> scores,
                            std::string_view method) {
  std::string out = "chunk_id,doc_id,year,novelty,transience,precocity,n_past,n_future,method,status\n";
  for (const auto& s : scores) {
    out += csv_escape(s.chunk_id) + ',' + csv_escape(s.doc_id) + ',' + std::to_string(s.year) + ',';
    out += format_real(s.novelty) + ',' + format_real(s.transience) + ',' + format_real(s.precocity) + ',';
    out += std::to_string(s.n_past) + ',' + std::to_string(s.n_future) + ',' + std::string(method) + ',';
    out += std::string(to_string(s.status)) + '\n';
  }
  write_file(path, out);
}

void write_doc_scores_csv(const std::filesystem::path& path, std::span<const DocScore> scores,
                          std::string_view method) {
  std::string out = "doc_id,year,novelty,transience,precocity,n_chunks,n_selected,method,fraction\n";
  for (const auto& d : scores) {
    if (!d.scored) continue;
    out += csv_escape(d.doc_id) + ',' + std::to_string(d.year) + ',';
    out += format_real(d.novelty) + ',' + format_real(d.transience) + ',' + format_real(d.precocity) + ',';
    out += std::to_string(d.n_chunks) + ',' + std::to_string(d.n_selected) + ',' + std::string(method) + ',';
    out += format_real(d.fraction) + '\n';
  }
  write_file(path, out);
}

std::vector<ChunkScore> read_chunk_scores_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto c_id = t.column("chunk_id"), c_doc = t.column("doc_id"), c_year = t.column("year"),
             c_nov = t.column("novelty"), c_tr = t.column("transience"), c_p = t.column("precocity"),
             c_np = t.column("n_past"), c_nf = t.column("n_future"), c_st = t.column("status");
  std::vector<ChunkScore> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.header.size())
      throw DataError(path.string() + " line " + std::to_string(t.line_numbers[r]) + ": wrong field count");
    ChunkScore s;
    s.chunk_id = row[c_id];
    s.doc_id = row[c_doc];
    s.year = std::stoi(row[c_year]);
    s.novelty = std::stod(row[c_nov]);
    s.transience = std::stod(row[c_tr]);
    s.precocity = std::stod(row[c_p]);
    s.n_past = std::stoul(row[c_np]);
    s.n_future = std::stoul(row[c_nf]);
    const auto& st = row[c_st];
    if (st == "scored") s.status = ScoreStatus::scored;
    else if (st == "not_central") s.status = ScoreStatus::not_central;
    else if (st == "insufficient_past") s.status = ScoreStatus::insufficient_past;
    else if (st == "insufficient_future") s.status = ScoreStatus::insufficient_future;
    else throw DataError(path.string() + ": unknown status '" + st + "'");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<DocScore> read_doc_scores_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto c_id = t.column("doc_id"), c_year = t.column("year"), c_nov = t.column("novelty"),
             c_tr = t.column("transience"), c_p = t.column("precocity"), c_n = t.column("n_chunks"),
             c_sel = t.column("n_selected"), c_f = t.column("fraction");
  std::vector<DocScore> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.header.size())
      throw DataError(path.string() + " line " + std::to_string(t.line_numbers[r]) + ": wrong field count");
    DocScore d;
    d.doc_id = row[c_id];
    d.year = std::stoi(row[c_year]);
    d.novelty = std::stod(row[c_nov]);
    d.transience = std::stod(row[c_tr]);
    d.precocity = std::stod(row[c_p]);
    d.n_chunks = std::stoul(row[c_n]);
    d.n_selected = std::stoul(row[c_sel]);
    d.fraction = std::stod(row[c_f]);
    d.scored = true;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace precocity
