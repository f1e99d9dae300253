#include "fixtures.hpp"

#include <atomic>
#include <chrono>
#include <cmath>

#include "oracles.hpp"

namespace fixtures {

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  const auto base = std::filesystem::temp_directory_path();
  const std::uint64_t tag = precocity::derive_seed(
      static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()),
      std::to_string(counter++));
  path_ = base / ("precocity-test-" + std::to_string(tag));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

precocity::DocumentRecord doc(std::string id, int year, std::string text, std::vector<std::string> authors) {
  precocity::DocumentRecord d;
  d.doc_id = std::move(id);
  d.year = year;
  d.text = std::move(text);
  d.author_ids = std::move(authors);
  return d;
}

std::string sentences(const std::vector<int>& lengths, const std::string& stem) {
  std::string out;
  for (std::size_t s = 0; s < lengths.size(); ++s) {
    if (s) out += ' ';
    for (int i = 0; i < lengths[s]; ++i) {
      std::string w = stem + std::to_string(s) + "x" + std::to_string(i);
      if (i == 0) w[0] = static_cast<char>(w[0] - 'a' + 'A');
      else out += ' ';
      out += w;
    }
    out += '.';
  }
  return out;
}

precocity::FeatureStore random_store(precocity::Rng& rng, std::size_t n, int first, int last,
                                     precocity::FeatureKind kind, std::size_t dim) {
  precocity::FeatureStore store(kind);
  const auto span = static_cast<std::uint64_t>(last - first + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const int year = first + static_cast<int>(precocity::uniform_index(rng, span));
    std::vector<double> v;
    if (kind == precocity::FeatureKind::topic_simplex) {
      v = oracle::random_simplex(rng, dim);
    } else {
      for (std::size_t d = 0; d < dim; ++d) v.push_back(2.0 * precocity::uniform01(rng) - 1.0);
    }
    store.add("c" + std::to_string(i), "d" + std::to_string(i / 2), year, std::move(v));
  }
  return store;
}

precocity::FeatureStore reverse_time(const precocity::FeatureStore& store) {
  precocity::FeatureStore out(store.kind());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto v = store.values(i);
    out.add(store.chunk_id(i), store.doc_id(i), -store.year(i), std::vector<double>(v.begin(), v.end()));
  }
  return out;
}

}  // namespace fixtures
