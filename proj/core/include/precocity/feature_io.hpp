#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "precocity/corpus.hpp"
#include "precocity/scoring.hpp"

namespace precocity {

struct FeatureIngest {
  FeatureStore store;
  std::string model_tag;
  // Chunks in the chunk table with no vector in the file.
  std::vector<std::string> missing_chunk_ids;
};

// Topic distributions as CSV: chunk_id,k0,...,kK-1.
void write_topic_distributions_csv(const std::filesystem::path& path, const FeatureStore& store);
FeatureIngest read_topic_distributions_csv(const std::filesystem::path& path, std::span<const Chunk> chunks);

// Embeddings as CSV: chunk_id,v0,...,vD-1. Every row must name a chunk from
// the chunk table; vectors keep file order.
void write_embeddings_csv(const std::filesystem::path& path, const FeatureStore& store);
FeatureIngest read_embeddings_csv(const std::filesystem::path& path, std::span<const Chunk> chunks);

// Dense row-major little-endian float32 matrix with a JSON sidecar at
// `<path>.json`:
//   {"format": "precocity.embeddings", "version": 1, "dtype": "float32",
//    "byte_order": "little", "count": N, "dimension": D, "model_tag": "...",
//    "chunk_ids": [...]}
void write_embeddings_binary(const std::filesystem::path& path, const FeatureStore& store,
                             const std::string& model_tag = "");
FeatureIngest read_embeddings_binary(const std::filesystem::path& path, std::span<const Chunk> chunks);

std::filesystem::path sidecar_path(const std::filesystem::path& binary_path);

// Dispatches on extension: .csv reads CSV, anything else the binary format.
FeatureIngest read_embeddings(const std::filesystem::path& path, std::span<const Chunk> chunks);

}  // namespace precocity
