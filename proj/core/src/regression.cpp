#include "precocity/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "precocity/error.hpp"
#include "precocity/table_io.hpp"

namespace precocity {
namespace {

constexpr double kRankTolerance = 1e-10;

double transform_citations(long long c, ResponseTransform t) {
  return t == ResponseTransform::log1p ? std::log1p(static_cast<double>(c)) : static_cast<double>(c);
}

}  // namespace

void DesignMatrix::add_column(std::string name, std::vector<double> values) {
  if (!columns.empty() && values.size() != rows())
    throw DataError("design column '" + name + "' has " + std::to_string(values.size()) + " rows, expected " +
                    std::to_string(rows()));
  names.push_back(std::move(name));
  columns.push_back(std::move(values));
}

RegressionResult fit_ols(const DesignMatrix& x, std::span<const double> y) {
  const std::size_t n = y.size();
  const std::size_t p = x.cols() + 1;
  if (x.cols() > 0 && x.rows() != n) throw DataError("design matrix and response differ in length");
  if (n <= p)
    throw ComputeError("regression needs more observations (" + std::to_string(n) + ") than parameters (" +
                       std::to_string(p) + ")");
  for (double v : y)
    if (!std::isfinite(v)) throw DataError("response contains a non-finite value");

  std::vector<std::string> names = {"(intercept)"};
  names.insert(names.end(), x.names.begin(), x.names.end());
  // Column-major working copy of [1 | X].
  std::vector<std::vector<double>> a(p, std::vector<double>(n));
  std::fill(a[0].begin(), a[0].end(), 1.0);
  for (std::size_t j = 1; j < p; ++j) {
    a[j] = x.columns[j - 1];
    for (double v : a[j])
      if (!std::isfinite(v)) throw DataError("design column '" + names[j] + "' contains a non-finite value");
  }
  std::vector<double> qty(y.begin(), y.end());

  std::vector<double> original_norm(p);
  for (std::size_t j = 0; j < p; ++j)
    original_norm[j] = std::sqrt(std::inner_product(a[j].begin(), a[j].end(), a[j].begin(), 0.0));

  std::vector<double> v(n);
  for (std::size_t j = 0; j < p; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < n; ++i) norm += a[j][i] * a[j][i];
    norm = std::sqrt(norm);
    if (original_norm[j] == 0.0 || norm <= kRankTolerance * original_norm[j]) {
      std::string msg = "rank-deficient design: column '" + names[j] + "' is collinear with";
      if (j == 0 || original_norm[j] == 0.0) {
        msg = "rank-deficient design: column '" + names[j] + "' is identically zero";
      } else {
        for (std::size_t k = 0; k < j; ++k) msg += (k ? ", '" : " '") + names[k] + "'";
      }
      throw ComputeError(msg);
    }
    const double alpha = a[j][j] > 0 ? -norm : norm;
    for (std::size_t i = 0; i < n; ++i) v[i] = i < j ? 0.0 : a[j][i];
    v[j] -= alpha;
    const double vnorm2 = std::inner_product(v.begin() + static_cast<std::ptrdiff_t>(j), v.end(),
                                             v.begin() + static_cast<std::ptrdiff_t>(j), 0.0);
    auto reflect = [&](std::vector<double>& col) {
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) dot += v[i] * col[i];
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = j; i < n; ++i) col[i] -= f * v[i];
    };
    for (std::size_t k = j; k < p; ++k) reflect(a[k]);
    reflect(qty);
  }

  std::vector<double> beta(p);
  for (std::size_t jj = p; jj-- > 0;) {
    double s = qty[jj];
    for (std::size_t k = jj + 1; k < p; ++k) s -= a[k][jj] * beta[k];
    beta[jj] = s / a[jj][jj];
  }

  RegressionResult r;
  r.n = n;
  r.intercept = beta[0];
  for (std::size_t j = 1; j < p; ++j) r.coefficients[names[j]] = beta[j];

  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sst = 0.0, ssr = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sumsq += y[i] * y[i];
    double fitted = beta[0];
    for (std::size_t j = 1; j < p; ++j) fitted += beta[j] * x.columns[j - 1][i];
    ssr += (y[i] - fitted) * (y[i] - fitted);
    sst += (y[i] - mean) * (y[i] - mean);
  }
  // A response that is constant up to rounding has nothing to explain.
  const bool constant = sst <= 1e-24 * std::max(sumsq, 1e-300);
  r.r_squared = constant ? 0.0 : std::clamp(1.0 - ssr / sst, 0.0, 1.0);
  return r;
}

std::string_view to_string(Response r) {
  switch (r) {
    case Response::citation_count: return "citation_count";
    case Response::author_age: return "author_age";
    case Response::discussed_flag: return "discussed_flag";
  }
  return "unknown";
}

Response response_from_string(std::string_view s) {
  if (s == "citation_count" || s == "citations") return Response::citation_count;
  if (s == "author_age" || s == "age") return Response::author_age;
  if (s == "discussed_flag" || s == "discussed") return Response::discussed_flag;
  throw ConfigError("unknown regression response '" + std::string(s) + "'");
}

RegressionResult fit_precocity_model(std::span<const DocScore> scores, std::span<const DocumentRecord> docs,
                                     const RegressionSpec& spec) {
  std::unordered_map<std::string, const DocumentRecord*> by_id;
  for (const auto& d : docs) by_id[d.doc_id] = &d;

  std::vector<double> precocity, precocity_sq, novelty, year, y;
  std::size_t dropped = 0;
  for (const auto& s : scores) {
    if (!s.scored) continue;
    auto it = by_id.find(s.doc_id);
    if (it == by_id.end()) throw DataError("score for unknown document " + s.doc_id);
    const DocumentRecord& d = *it->second;
    std::optional<double> response;
    switch (spec.response) {
      case Response::citation_count:
        if (d.citation_count) response = transform_citations(*d.citation_count, spec.transform);
        break;
      case Response::author_age:
        if (d.author_birth_year) response = static_cast<double>(d.year - *d.author_birth_year);
        break;
      case Response::discussed_flag:
        if (d.discussed_flag) response = *d.discussed_flag ? 1.0 : 0.0;
        break;
    }
    if (!response) {
      ++dropped;
      continue;
    }
    precocity.push_back(s.precocity);
    precocity_sq.push_back(s.precocity * s.precocity);
    novelty.push_back(s.novelty);
    year.push_back(static_cast<double>(s.year));
    y.push_back(*response);
  }
  if (y.size() < kMinRegressionRows)
    throw ComputeError("regression on " + std::string(to_string(spec.response)) + " has only " +
                       std::to_string(y.size()) + " usable rows");
  DesignMatrix x;
  x.add_column("precocity", std::move(precocity));
  x.add_column("precocity_sq", std::move(precocity_sq));
  x.add_column("novelty", std::move(novelty));
  x.add_column("year", std::move(year));
  RegressionResult r = fit_ols(x, y);
  r.dropped_rows = dropped;
  return r;
}

std::vector<double> zscore(std::span<const double> values) {
  if (values.size() < 2) throw ComputeError("zscore needs at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0, scale = 0.0;
  for (double v : values) {
    ss += (v - mean) * (v - mean);
    scale = std::max(scale, std::abs(v));
  }
  const double sd = std::sqrt(ss / n);
  if (!(sd > 1e-14 * std::max(scale, 1e-300))) throw ComputeError("zscore of values with zero variance");
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back((v - mean) / sd);
  return out;
}

std::vector<GroupSummary> summarize_groups(std::span<const DocScore> scores, std::span<const DocumentRecord> docs,
                                           GroupField field, ResponseTransform citation_transform) {
  std::unordered_map<std::string, const DocumentRecord*> by_id;
  for (const auto& d : docs) by_id[d.doc_id] = &d;

  std::vector<const DocumentRecord*> members;
  std::vector<double> precocity, citations;
  for (const auto& s : scores) {
    if (!s.scored) continue;
    auto it = by_id.find(s.doc_id);
    if (it == by_id.end() || !it->second->citation_count) continue;
    members.push_back(it->second);
    precocity.push_back(s.precocity);
    citations.push_back(transform_citations(*it->second->citation_count, citation_transform));
  }
  const auto pz = zscore(precocity);
  const auto cz = zscore(citations);

  std::map<std::string, GroupSummary> groups;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto& keys = field == GroupField::group_tags ? members[i]->group_tags : members[i]->author_ids;
    for (const auto& key : keys) {
      auto& g = groups[key];
      g.group_id = key;
      g.mean_precocity_z += pz[i];
      g.mean_citations_z += cz[i];
      ++g.n_articles;
    }
  }
  std::vector<GroupSummary> out;
  for (auto& [key, g] : groups) {
    if (g.n_articles == 0) continue;
    g.mean_precocity_z /= static_cast<double>(g.n_articles);
    g.mean_citations_z /= static_cast<double>(g.n_articles);
    out.push_back(g);
  }
  return out;
}

void write_group_summaries_csv(const std::filesystem::path& path, std::span<const GroupSummary> groups) {
  std::string out = "group_id,mean_precocity_z,mean_citations_z,n_articles\n";
  for (const auto& g : groups) {
    out += csv_escape(g.group_id) + ',' + format_real(g.mean_precocity_z) + ',' + format_real(g.mean_citations_z) +
           ',' + std::to_string(g.n_articles) + '\n';
  }
  write_file(path, out);
}

}  // namespace precocity
