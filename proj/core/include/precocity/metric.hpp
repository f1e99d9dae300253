#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace precocity {

enum class FeatureKind { topic_simplex, embedding };

enum class Metric { kl, cosine };

std::string_view to_string(FeatureKind kind);
std::string_view to_string(Metric metric);
Metric metric_for(FeatureKind kind);

// A chunk's representation under one text model.
struct FeatureVector {
  std::string chunk_id;
  FeatureKind kind = FeatureKind::topic_simplex;
  std::vector<double> values;
};

inline constexpr double kDefaultKlEpsilon = 1e-10;
inline constexpr double kSimplexTolerance = 1e-9;

// Throws DataError unless the vector satisfies its kind's invariants:
// a strictly positive simplex summing to 1, or a finite non-zero embedding.
void validate(const FeatureVector& v);

// Floors entries below epsilon to epsilon and renormalizes.
std::vector<double> floor_simplex(std::span<const double> p, double epsilon = kDefaultKlEpsilon);

// KL(p || q) in nats, p being the distribution under characterization.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double epsilon = kDefaultKlEpsilon);

// 1 - cos(u, v), in [0, 2].
double cosine_distance(std::span<const double> u, std::span<const double> v);

double divergence(Metric metric, std::span<const double> target, std::span<const double> other);

}  // namespace precocity
