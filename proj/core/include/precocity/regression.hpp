#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "precocity/corpus.hpp"
#include "precocity/scoring.hpp"

namespace precocity {

// Dense column-major design matrix without the intercept column; fit_ols
// adds the intercept itself.
struct DesignMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  std::size_t cols() const { return columns.size(); }
  void add_column(std::string name, std::vector<double> values);
};

struct RegressionResult {
  std::map<std::string, double> coefficients;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
  std::size_t dropped_rows = 0;
};

// Least squares with an intercept via Householder QR. Throws ComputeError
// naming the offending column when the design is rank-deficient, and when
// there are no more rows than parameters.
RegressionResult fit_ols(const DesignMatrix& x, std::span<const double> y);

enum class Response { citation_count, author_age, discussed_flag };
enum class ResponseTransform { log1p, raw };

std::string_view to_string(Response r);
Response response_from_string(std::string_view s);

// Predictors are fixed: precocity, precocity^2, novelty, and publication
// year as a control.
struct RegressionSpec {
  Response response = Response::citation_count;
  // Applied to citation counts only; age and the discussed flag stay raw.
  ResponseTransform transform = ResponseTransform::log1p;
};

inline constexpr std::size_t kMinRegressionRows = 6;

// One row per scored document with a response value. Rows whose response is
// missing are dropped and counted in RegressionResult::dropped_rows.
RegressionResult fit_precocity_model(std::span<const DocScore> scores,
                                     std::span<const DocumentRecord> docs, const RegressionSpec& spec);

// Population z-scores; throws ComputeError on zero variance or < 2 values.
std::vector<double> zscore(std::span<const double> values);

struct GroupSummary {
  std::string group_id;
  double mean_precocity_z = 0.0;
  double mean_citations_z = 0.0;
  std::size_t n_articles = 0;
};

enum class GroupField { group_tags, author_ids };

// z-scores precocity and (transformed) citations over every scored document
// that has a citation count, then averages them per group. A document
// contributes to each of its groups.
std::vector<GroupSummary> summarize_groups(std::span<const DocScore> scores,
                                           std::span<const DocumentRecord> docs, GroupField field,
                                           ResponseTransform citation_transform = ResponseTransform::log1p);

void write_group_summaries_csv(const std::filesystem::path& path, std::span<const GroupSummary> groups);

}  // namespace precocity
