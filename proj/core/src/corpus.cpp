#include "precocity/corpus.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "precocity/error.hpp"
#include "precocity/table_io.hpp"
#include "precocity/tokenizer.hpp"

namespace precocity {
namespace {

using nlohmann::json;

[[noreturn]] void fail(std::size_t line, std::string_view field, std::string_view what) {
  std::ostringstream msg;
  msg << "corpus line " << line << ": field '" << field << "' " << what;
  throw DataError(msg.str());
}

std::vector<std::string> string_list(const json& v, std::size_t line, std::string_view field) {
  std::vector<std::string> out;
  if (v.is_null()) return out;
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
    return out;
  }
  if (!v.is_array()) fail(line, field, "must be a string or array of strings");
  for (const auto& e : v) {
    if (!e.is_string()) fail(line, field, "must contain only strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

DocumentRecord parse_record(const json& obj, std::size_t line, const CorpusSchema& schema) {
  if (!obj.is_object()) fail(line, "<record>", "is not a JSON object");
  DocumentRecord doc;

  auto id = obj.find(schema.doc_id);
  if (id == obj.end() || id->is_null()) fail(line, schema.doc_id, "is missing");
  if (id->is_string()) {
    doc.doc_id = id->get<std::string>();
  } else if (id->is_number_integer()) {
    doc.doc_id = std::to_string(id->get<long long>());
  } else {
    fail(line, schema.doc_id, "must be a string");
  }
  if (doc.doc_id.empty()) fail(line, schema.doc_id, "is empty");

  auto year = obj.find(schema.year);
  if (year == obj.end() || year->is_null()) fail(line, schema.year, "is missing (doc " + doc.doc_id + ")");
  if (year->is_number_integer()) {
    doc.year = year->get<int>();
  } else if (year->is_number_float() && std::floor(year->get<double>()) == year->get<double>()) {
    doc.year = static_cast<int>(year->get<double>());
  } else if (year->is_string()) {
    try {
      std::size_t used = 0;
      const std::string s = year->get<std::string>();
      doc.year = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      fail(line, schema.year, "is not an integer year (doc " + doc.doc_id + ")");
    }
  } else {
    fail(line, schema.year, "is not an integer year (doc " + doc.doc_id + ")");
  }
  if ((schema.min_year && doc.year < *schema.min_year) ||
      (schema.max_year && doc.year > *schema.max_year)) {
    fail(line, schema.year, "is outside the configured corpus range (doc " + doc.doc_id + ")");
  }

  auto text = obj.find(schema.text);
  if (text == obj.end() || !text->is_string())
    fail(line, schema.text, "is missing or not a string (doc " + doc.doc_id + ")");
  doc.text = text->get<std::string>();

  if (auto a = obj.find(schema.author_ids); a != obj.end())
    doc.author_ids = string_list(*a, line, schema.author_ids);
  if (auto g = obj.find(schema.group_tags); g != obj.end())
    doc.group_tags = string_list(*g, line, schema.group_tags);

  if (auto c = obj.find(schema.citation_count); c != obj.end() && !c->is_null()) {
    if (!c->is_number_integer()) fail(line, schema.citation_count, "must be an integer");
    const long long v = c->get<long long>();
    if (v < 0) fail(line, schema.citation_count, "must be non-negative");
    doc.citation_count = v;
  }
  if (auto b = obj.find(schema.author_birth_year); b != obj.end() && !b->is_null()) {
    if (!b->is_number_integer()) fail(line, schema.author_birth_year, "must be an integer");
    doc.author_birth_year = b->get<int>();
  }
  if (auto f = obj.find(schema.discussed_flag); f != obj.end() && !f->is_null()) {
    if (f->is_boolean()) {
      doc.discussed_flag = f->get<bool>();
    } else if (f->is_number_integer() && (f->get<int>() == 0 || f->get<int>() == 1)) {
      doc.discussed_flag = f->get<int>() == 1;
    } else {
      fail(line, schema.discussed_flag, "must be a boolean");
    }
  }
  return doc;
}

json record_to_json(const DocumentRecord& d) {
  json j;
  j["doc_id"] = d.doc_id;
  j["year"] = d.year;
  j["author_ids"] = d.author_ids;
  if (d.citation_count) j["citation_count"] = *d.citation_count;
  if (d.author_birth_year) j["author_birth_year"] = *d.author_birth_year;
  j["group_tags"] = d.group_tags;
  if (d.discussed_flag) j["discussed_flag"] = *d.discussed_flag;
  j["text"] = d.text;
  return j;
}

Chunk make_chunk(const DocumentRecord& doc, int seq, std::string id) {
  Chunk c;
  c.chunk_id = std::move(id);
  c.doc_id = doc.doc_id;
  c.seq = seq;
  c.year = doc.year;
  return c;
}

}  // namespace

std::vector<DocumentRecord> parse_corpus(std::string_view jsonl, const CorpusSchema& schema) {
  std::vector<DocumentRecord> docs;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == jsonl.size()) break;
      continue;
    }
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("corpus line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    DocumentRecord doc = parse_record(obj, line_no, schema);
    if (!seen.insert(doc.doc_id).second) {
      throw DataError("corpus line " + std::to_string(line_no) + ": duplicate doc_id '" +
                      doc.doc_id + "'");
    }
    docs.push_back(std::move(doc));
    if (end == jsonl.size()) break;
  }
  return docs;
}

std::vector<DocumentRecord> ingest_corpus(const std::filesystem::path& path,
                                          const CorpusSchema& schema) {
  if (!std::filesystem::exists(path)) throw DataError("corpus file not found: " + path.string());
  return parse_corpus(read_file(path), schema);
}

std::string corpus_to_jsonl(std::span<const DocumentRecord> docs) {
  std::string out;
  for (const auto& d : docs) {
    out += record_to_json(d).dump();
    out += '\n';
  }
  return out;
}

void write_corpus_jsonl(const std::filesystem::path& path, std::span<const DocumentRecord> docs) {
  write_file(path, corpus_to_jsonl(docs));
}

DocumentRecord trim_paratext(const DocumentRecord& doc, double fraction) {
  if (!(fraction >= 0.0) || fraction >= 0.5)
    throw ConfigError("paratext fraction must lie in [0, 0.5)");
  DocumentRecord out = doc;
  if (fraction == 0.0) return out;
  const auto tok = tokenize(doc.text);
  const std::size_t n = tok.tokens.size();
  const auto cut = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  if (cut == 0) return out;
  const std::size_t first = cut;
  const std::size_t last = n - cut - 1;
  out.text = doc.text.substr(tok.tokens[first].begin, tok.tokens[last].end - tok.tokens[first].begin);
  return out;
}

std::string embedding_chunk_id(const std::string& doc_id, int seq) {
  return doc_id + "#e" + std::to_string(seq);
}

std::string topic_chunk_id(const std::string& doc_id, int seq) {
  return doc_id + "#t" + std::to_string(seq);
}

std::vector<Chunk> chunk_embedding_granularity(const DocumentRecord& doc, std::size_t max_tokens) {
  if (max_tokens == 0) throw ConfigError("max_tokens must be positive");
  std::vector<Chunk> chunks;
  const auto tok = tokenize(doc.text);
  if (tok.tokens.empty()) return chunks;

  Chunk current;
  bool open = false;
  std::size_t text_begin = 0, text_end = 0;
  auto flush = [&] {
    if (!open) return;
    current.text = doc.text.substr(text_begin, text_end - text_begin);
    chunks.push_back(std::move(current));
    open = false;
  };

  std::size_t sent_begin = 0;
  for (std::size_t s = 0; s < tok.sentence_ends.size(); ++s) {
    const std::size_t sent_end = tok.sentence_ends[s];
    const std::size_t len = sent_end - sent_begin;
    const auto [byte_begin, byte_end] = tok.sentence_bytes[s];

    if (open && current.tokens.size() + len > max_tokens) flush();
    if (!open) {
      const int seq = static_cast<int>(chunks.size());
      current = make_chunk(doc, seq, embedding_chunk_id(doc.doc_id, seq));
      text_begin = byte_begin;
      open = true;
    }
    const std::size_t take = std::min(len, max_tokens - current.tokens.size());
    const std::size_t offset = current.tokens.size();
    for (std::size_t i = 0; i < take; ++i) current.tokens.push_back(tok.tokens[sent_begin + i].text);
    current.sentence_spans.emplace_back(offset, offset + take);
    text_end = byte_end;
    // An over-long sentence is truncated and closes its chunk.
    if (take < len || current.tokens.size() == max_tokens) flush();
    sent_begin = sent_end;
  }
  flush();
  return chunks;
}

std::vector<Chunk> chunk_topic_granularity(std::span<const Chunk> embedding_chunks,
                                           std::size_t min_tokens) {
  std::vector<Chunk> out;
  if (embedding_chunks.empty()) return out;

  auto append = [](Chunk& into, const Chunk& from) {
    const std::size_t offset = into.tokens.size();
    into.tokens.insert(into.tokens.end(), from.tokens.begin(), from.tokens.end());
    for (auto [b, e] : from.sentence_spans) into.sentence_spans.emplace_back(b + offset, e + offset);
    if (!into.text.empty() && !from.text.empty()) into.text += ' ';
    into.text += from.text;
  };

  Chunk current;
  bool open = false;
  for (const Chunk& ec : embedding_chunks) {
    if (!open) {
      const int seq = static_cast<int>(out.size());
      current = Chunk{};
      current.chunk_id = topic_chunk_id(ec.doc_id, seq);
      current.doc_id = ec.doc_id;
      current.seq = seq;
      current.year = ec.year;
      open = true;
    } else if (ec.doc_id != current.doc_id) {
      throw DataError("chunk_topic_granularity: input mixes documents " + current.doc_id +
                      " and " + ec.doc_id);
    }
    append(current, ec);
    if (current.tokens.size() >= min_tokens) {
      out.push_back(std::move(current));
      open = false;
    }
  }
  if (open) {
    if (out.empty()) {
      out.push_back(std::move(current));
    } else {
      append(out.back(), current);
    }
  }
  return out;
}

void write_chunks_jsonl(const std::filesystem::path& path, std::span<const Chunk> chunks) {
  std::string out;
  for (const auto& c : chunks) {
    json j;
    j["chunk_id"] = c.chunk_id;
    j["doc_id"] = c.doc_id;
    j["seq"] = c.seq;
    j["year"] = c.year;
    j["token_count"] = c.tokens.size();
    j["tokens"] = c.tokens;
    json spans = json::array();
    for (auto [b, e] : c.sentence_spans) spans.push_back({b, e});
    j["sentence_spans"] = std::move(spans);
    j["text"] = c.text;
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

std::vector<Chunk> read_chunks_jsonl(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::vector<Chunk> chunks;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      Chunk c;
      c.chunk_id = j.at("chunk_id").get<std::string>();
      c.doc_id = j.at("doc_id").get<std::string>();
      c.seq = j.at("seq").get<int>();
      c.year = j.at("year").get<int>();
      c.tokens = j.at("tokens").get<std::vector<std::string>>();
      for (const auto& s : j.at("sentence_spans"))
        c.sentence_spans.emplace_back(s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>());
      c.text = j.value("text", std::string{});
      chunks.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return chunks;
}

void write_chunks_csv(const std::filesystem::path& path, std::span<const Chunk> chunks) {
  std::string out = "chunk_id,doc_id,seq,token_count\n";
  for (const auto& c : chunks) {
    out += csv_escape(c.chunk_id) + ',' + csv_escape(c.doc_id) + ',' + std::to_string(c.seq) + ',' +
           std::to_string(c.tokens.size()) + '\n';
  }
  write_file(path, out);
}

}  // namespace precocity
