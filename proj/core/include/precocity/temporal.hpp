#pragma once

namespace precocity {

// Closed interval of calendar years.
struct YearRange {
  int first = 0;
  int last = 0;

  bool contains(int year) const { return year >= first && year <= last; }
  bool contains(const YearRange& r) const { return r.first >= first && r.last <= last; }
  int length() const { return last - first + 1; }
  bool operator==(const YearRange&) const = default;
};

struct WindowConfig {
  int past_years = 20;
  int future_years = 20;
  int corpus_start = 0;
  int corpus_end = 0;
  // When set, the last central year is corpus_end - future_years - 1, the
  // reading under which a 1890-2000 corpus is characterized over 1910-1979.
  bool exclusive_central_end = false;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

struct ComparisonWindow {
  YearRange past;
  YearRange future;
};

// Past and future comparison ranges; the publication year belongs to
// neither.
ComparisonWindow comparison_window(int year, const WindowConfig& cfg);

bool is_central(int year, const WindowConfig& cfg);

// The years for which is_central holds (empty when first > last).
YearRange central_period(const WindowConfig& cfg);

// Overlapping language-model periods: window_len-year training spans that
// advance offset years at a time, with texts grouped into offset-year
// buckets aligned on anchor_year.
struct PeriodScheme {
  int window_len = 12;
  int offset = 4;
  int anchor_year = 1968;

  void validate() const;
  // Anchor at the first multiple of `offset` not before corpus_start.
  static PeriodScheme for_corpus(int corpus_start, int window_len = 12, int offset = 4);
};

struct PerplexityPeriods {
  YearRange bucket;
  YearRange past;
  YearRange future;
  // Training span centred on the bucket; the reference for the future-only
  // "prescience" variant.
  YearRange present;
};

PerplexityPeriods perplexity_periods(int year, const PeriodScheme& scheme);

}  // namespace precocity
