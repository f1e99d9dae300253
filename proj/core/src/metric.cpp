#include "precocity/metric.hpp"

#include <cmath>

#include "precocity/error.hpp"

namespace precocity {

std::string_view to_string(FeatureKind kind) {
  return kind == FeatureKind::topic_simplex ? "topic_simplex" : "embedding";
}

std::string_view to_string(Metric metric) { return metric == Metric::kl ? "kl" : "cosine"; }

Metric metric_for(FeatureKind kind) {
  return kind == FeatureKind::topic_simplex ? Metric::kl : Metric::cosine;
}

void validate(const FeatureVector& v) {
  if (v.values.empty()) throw DataError("feature vector for " + v.chunk_id + " is empty");
  if (v.kind == FeatureKind::topic_simplex) {
    double sum = 0.0;
    for (double x : v.values) {
      if (!(x > 0.0) || !std::isfinite(x))
        throw DataError("topic distribution for " + v.chunk_id + " has a non-positive entry");
      sum += x;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance)
      throw DataError("topic distribution for " + v.chunk_id + " does not sum to 1");
  } else {
    double norm2 = 0.0;
    for (double x : v.values) {
      if (!std::isfinite(x)) throw DataError("embedding for " + v.chunk_id + " has a non-finite entry");
      norm2 += x * x;
    }
    if (norm2 == 0.0) throw DataError("embedding for " + v.chunk_id + " has zero norm");
  }
}

std::vector<double> floor_simplex(std::span<const double> p, double epsilon) {
  std::vector<double> out(p.begin(), p.end());
  double sum = 0.0;
  for (double& x : out) {
    if (!(x >= epsilon)) x = epsilon;
    sum += x;
  }
  for (double& x : out) x /= sum;
  return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q, double epsilon) {
  if (p.size() != q.size()) throw DataError("kl_divergence: length mismatch");
  const auto ps = floor_simplex(p, epsilon);
  const auto qs = floor_simplex(q, epsilon);
  double kl = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) kl += ps[i] * std::log(ps[i] / qs[i]);
  // Rounding can leave a tiny negative residue for p == q.
  return kl < 0.0 ? 0.0 : kl;
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DataError("cosine_distance: length mismatch");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw DataError("cosine_distance: zero-norm vector");
  double d = 1.0 - dot / (std::sqrt(uu) * std::sqrt(vv));
  if (d < 0.0) d = 0.0;
  if (d > 2.0) d = 2.0;
  return d;
}

double divergence(Metric metric, std::span<const double> target, std::span<const double> other) {
  return metric == Metric::kl ? kl_divergence(target, other) : cosine_distance(target, other);
}

}  // namespace precocity
