#pragma once

// Reference implementations used only by tests. Each one takes a different
// numerical route from the library code it checks.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "precocity/metric.hpp"
#include "precocity/random.hpp"
#include "precocity/regression.hpp"
#include "precocity/reuse_filter.hpp"
#include "precocity/scoring.hpp"
#include "precocity/temporal.hpp"

namespace oracle {

// Floors and renormalizes in long double, then sums p * (log p - log q).
double kl(std::span<const double> p, std::span<const double> q, double epsilon = 1e-10);

double cosine_distance(std::span<const double> u, std::span<const double> v);

// Every target against every other vector in the store: window membership
// is checked pair by pair, with no year blocking or precomputation.
std::vector<precocity::ChunkScore> naive_scores(const precocity::FeatureStore& store,
                                                const precocity::ExclusionSet& exclusions,
                                                const precocity::WindowConfig& window,
                                                int min_comparisons, bool central_only = true);

struct OlsFit {
  std::vector<double> beta;  // intercept first
  double r_squared = 0.0;
};

// Normal equations X'X b = X'y accumulated in long double and solved by
// Cholesky.
OlsFit normal_equations(const std::vector<std::vector<double>>& columns, std::span<const double> y);

std::vector<double> random_simplex(precocity::Rng& rng, std::size_t k);

}  // namespace oracle
