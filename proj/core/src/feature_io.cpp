#include "precocity/feature_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "precocity/error.hpp"
#include "precocity/table_io.hpp"

namespace precocity {
namespace {

using ChunkIndex = std::unordered_map<std::string, const Chunk*>;

ChunkIndex index_chunks(std::span<const Chunk> chunks) {
  ChunkIndex idx;
  for (const auto& c : chunks) idx.emplace(c.chunk_id, &c);
  return idx;
}

std::vector<std::string> missing_from(std::span<const Chunk> chunks, const FeatureStore& store) {
  std::unordered_set<std::string> present;
  for (std::size_t i = 0; i < store.size(); ++i) present.insert(store.chunk_id(i));
  std::vector<std::string> missing;
  for (const auto& c : chunks)
    if (!present.count(c.chunk_id)) missing.push_back(c.chunk_id);
  return missing;
}

double parse_value(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw DataError(where + ": '" + s + "' is not a number");
  return v;
}

void check_header(const CsvTable& t, const std::filesystem::path& path, char prefix) {
  if (t.header.empty() || t.header[0] != "chunk_id")
    throw DataError(path.string() + ": first column must be chunk_id");
  if (t.header.size() < 2) throw DataError(path.string() + ": no value columns");
  for (std::size_t i = 1; i < t.header.size(); ++i) {
    if (t.header[i] != std::string(1, prefix) + std::to_string(i - 1))
      throw DataError(path.string() + ": column " + std::to_string(i + 1) + " should be " + prefix +
                      std::to_string(i - 1) + ", found '" + t.header[i] + "'");
  }
}

FeatureIngest read_feature_csv(const std::filesystem::path& path, std::span<const Chunk> chunks,
                               FeatureKind kind, char prefix) {
  const CsvTable t = read_csv(path);
  check_header(t, path, prefix);
  const auto idx = index_chunks(chunks);
  FeatureIngest out{FeatureStore(kind), "", {}};
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = path.string() + ":" + std::to_string(t.line_numbers[r]);
    if (row.size() != t.header.size())
      throw DataError(where + ": expected " + std::to_string(t.header.size()) + " fields, found " +
                      std::to_string(row.size()));
    auto it = idx.find(row[0]);
    if (it == idx.end()) throw DataError(where + ": unknown chunk_id '" + row[0] + "'");
    std::vector<double> values;
    values.reserve(row.size() - 1);
    for (std::size_t i = 1; i < row.size(); ++i) values.push_back(parse_value(row[i], where));
    try {
      out.store.add(row[0], it->second->doc_id, it->second->year, std::move(values));
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  out.missing_chunk_ids = missing_from(chunks, out.store);
  return out;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureStore& store, char prefix) {
  std::string out = "chunk_id";
  for (std::size_t d = 0; d < store.dimension(); ++d) out += "," + std::string(1, prefix) + std::to_string(d);
  out += '\n';
  for (std::size_t i = 0; i < store.size(); ++i) {
    out += csv_escape(store.chunk_id(i));
    for (double v : store.values(i)) out += ',' + format_real(v);
    out += '\n';
  }
  write_file(path, out);
}

std::uint32_t to_little(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::little) return x;
  return ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& binary_path) {
  return binary_path.string() + ".json";
}

void write_topic_distributions_csv(const std::filesystem::path& path, const FeatureStore& store) {
  write_feature_csv(path, store, 'k');
}

FeatureIngest read_topic_distributions_csv(const std::filesystem::path& path, std::span<const Chunk> chunks) {
  return read_feature_csv(path, chunks, FeatureKind::topic_simplex, 'k');
}

void write_embeddings_csv(const std::filesystem::path& path, const FeatureStore& store) {
  write_feature_csv(path, store, 'v');
}

FeatureIngest read_embeddings_csv(const std::filesystem::path& path, std::span<const Chunk> chunks) {
  return read_feature_csv(path, chunks, FeatureKind::embedding, 'v');
}

void write_embeddings_binary(const std::filesystem::path& path, const FeatureStore& store,
                             const std::string& model_tag) {
  std::string bytes;
  bytes.reserve(store.size() * store.dimension() * 4);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < store.size(); ++i) {
    ids.push_back(store.chunk_id(i));
    for (double v : store.values(i)) {
      const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      char buf[4];
      std::memcpy(buf, &bits, 4);
      bytes.append(buf, 4);
    }
  }
  nlohmann::ordered_json meta = {{"format", "precocity.embeddings"},
                                 {"version", 1},
                                 {"dtype", "float32"},
                                 {"byte_order", "little"},
                                 {"count", store.size()},
                                 {"dimension", store.dimension()},
                                 {"model_tag", model_tag},
                                 {"chunk_ids", ids}};
  write_file(path, bytes);
  write_file(sidecar_path(path), meta.dump(1) + "\n");
}

FeatureIngest read_embeddings_binary(const std::filesystem::path& path, std::span<const Chunk> chunks) {
  const auto side = sidecar_path(path);
  if (!std::filesystem::exists(side)) throw DataError("missing embedding sidecar " + side.string());
  nlohmann::json meta;
  std::size_t count = 0, dim = 0;
  std::vector<std::string> ids;
  FeatureIngest out{FeatureStore(FeatureKind::embedding), "", {}};
  try {
    meta = nlohmann::json::parse(read_file(side));
    if (meta.at("format").get<std::string>() != "precocity.embeddings")
      throw DataError(side.string() + ": unexpected format tag");
    if (meta.at("version").get<int>() != 1) throw DataError(side.string() + ": unsupported version");
    if (meta.at("dtype").get<std::string>() != "float32") throw DataError(side.string() + ": dtype must be float32");
    if (meta.value("byte_order", "little") != "little") throw DataError(side.string() + ": byte_order must be little");
    count = meta.at("count").get<std::size_t>();
    dim = meta.at("dimension").get<std::size_t>();
    ids = meta.at("chunk_ids").get<std::vector<std::string>>();
    out.model_tag = meta.value("model_tag", "");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(side.string() + ": malformed sidecar: " + e.what());
  }
  if (ids.size() != count) throw DataError(side.string() + ": chunk_ids length differs from count");
  const std::string bytes = read_file(path);
  if (bytes.size() != count * dim * 4)
    throw DataError(path.string() + ": expected " + std::to_string(count * dim * 4) + " bytes, found " +
                    std::to_string(bytes.size()));
  const auto idx = index_chunks(chunks);
  for (std::size_t i = 0; i < count; ++i) {
    auto it = idx.find(ids[i]);
    if (it == idx.end()) throw DataError(side.string() + ": unknown chunk_id '" + ids[i] + "'");
    std::vector<double> values(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      std::uint32_t bits;
      std::memcpy(&bits, bytes.data() + (i * dim + d) * 4, 4);
      values[d] = static_cast<double>(std::bit_cast<float>(to_little(bits)));
    }
    try {
      out.store.add(ids[i], it->second->doc_id, it->second->year, std::move(values));
    } catch (const DataError& e) {
      throw DataError(path.string() + ": row " + std::to_string(i) + ": " + e.what());
    }
  }
  out.missing_chunk_ids = missing_from(chunks, out.store);
  return out;
}

FeatureIngest read_embeddings(const std::filesystem::path& path, std::span<const Chunk> chunks) {
  if (path.extension() == ".csv") return read_embeddings_csv(path, chunks);
  return read_embeddings_binary(path, chunks);
}

}  // namespace precocity
