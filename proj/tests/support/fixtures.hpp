#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "precocity/corpus.hpp"
#include "precocity/random.hpp"
#include "precocity/scoring.hpp"

namespace fixtures {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

precocity::DocumentRecord doc(std::string id, int year, std::string text,
                              std::vector<std::string> authors = {});

// Sentences of the given token counts, words "w<sentence>x<index>", each
// capitalized and ending in a period.
std::string sentences(const std::vector<int>& lengths, const std::string& stem = "w");

// n chunks with years drawn uniformly from [first, last]; doc ids group
// chunks in pairs.
precocity::FeatureStore random_store(precocity::Rng& rng, std::size_t n, int first, int last,
                                     precocity::FeatureKind kind, std::size_t dim);

// Same vectors with year -> -year.
precocity::FeatureStore reverse_time(const precocity::FeatureStore& store);

}  // namespace fixtures
