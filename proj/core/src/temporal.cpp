#include "precocity/temporal.hpp"

#include "precocity/error.hpp"

namespace precocity {
namespace {

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

void WindowConfig::validate() const {
  if (past_years <= 0 || future_years <= 0) throw ConfigError("window sizes must be positive");
  if (corpus_start > corpus_end) throw ConfigError("corpus_start must not exceed corpus_end");
}

ComparisonWindow comparison_window(int year, const WindowConfig& cfg) {
  return {{year - cfg.past_years, year - 1}, {year + 1, year + cfg.future_years}};
}

bool is_central(int year, const WindowConfig& cfg) {
  if (year - cfg.past_years < cfg.corpus_start) return false;
  if (cfg.exclusive_central_end) return year + cfg.future_years < cfg.corpus_end;
  return year + cfg.future_years <= cfg.corpus_end;
}

YearRange central_period(const WindowConfig& cfg) {
  const int last = cfg.corpus_end - cfg.future_years - (cfg.exclusive_central_end ? 1 : 0);
  return {cfg.corpus_start + cfg.past_years, last};
}

void PeriodScheme::validate() const {
  if (offset < 1) throw ConfigError("period offset must be at least 1");
  if (window_len < offset || window_len % offset != 0)
    throw ConfigError("period window_len must be a positive multiple of offset");
  if ((window_len - offset) % 2 != 0)
    throw ConfigError("period window_len - offset must be even so periods centre on buckets");
}

PeriodScheme PeriodScheme::for_corpus(int corpus_start, int window_len, int offset) {
  PeriodScheme s{window_len, offset, 0};
  s.validate();
  const int q = floor_div(corpus_start, offset);
  s.anchor_year = q * offset == corpus_start ? corpus_start : (q + 1) * offset;
  return s;
}

PerplexityPeriods perplexity_periods(int year, const PeriodScheme& scheme) {
  scheme.validate();
  const int t = scheme.anchor_year + floor_div(year - scheme.anchor_year, scheme.offset) * scheme.offset;
  PerplexityPeriods p;
  p.bucket = {t, t + scheme.offset - 1};
  p.past = {t - scheme.offset - scheme.window_len, t - scheme.offset - 1};
  p.future = {t + 2 * scheme.offset, t + 2 * scheme.offset + scheme.window_len - 1};
  const int present_start = t - (scheme.window_len - scheme.offset) / 2;
  p.present = {present_start, present_start + scheme.window_len - 1};
  return p;
}

}  // namespace precocity
