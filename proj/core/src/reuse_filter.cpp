#include "precocity/reuse_filter.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"
#include "precocity/error.hpp"
#include "precocity/table_io.hpp"
#include "precocity/tokenizer.hpp"

namespace precocity {
namespace {

enum class QuoteKind { double_quote, single_quote };

struct OpenQuote {
  QuoteKind kind;
  std::size_t content_begin;
  std::size_t at;
};

std::string join_run(std::span<const std::string> tokens, std::size_t start, std::size_t n) {
  std::string key;
  for (std::size_t i = start; i < start + n; ++i) {
    if (i > start) key += '\x1f';
    key += tokens[i];
  }
  return key;
}

bool contains_sequence(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

QuoteExtraction extract_quotes(std::string_view text) {
  QuoteExtraction out;
  std::vector<OpenQuote> stack;

  auto close = [&](QuoteKind kind, std::size_t at, bool warn_if_unmatched) {
    auto it = std::find_if(stack.rbegin(), stack.rend(),
                           [&](const OpenQuote& q) { return q.kind == kind; });
    if (it == stack.rend()) {
      if (warn_if_unmatched)
        out.warnings.push_back("unmatched closing quote at byte " + std::to_string(at));
      return;
    }
    const std::size_t keep = static_cast<std::size_t>(stack.rend() - it) - 1;
    for (std::size_t i = keep + 1; i < stack.size(); ++i)
      out.warnings.push_back("unmatched opening quote at byte " + std::to_string(stack[i].at));
    const OpenQuote opener = stack[keep];
    stack.resize(keep);
    if (stack.empty()) {
      auto words = word_tokens(text.substr(opener.content_begin, at - opener.content_begin));
      if (!words.empty()) out.quotes.push_back(std::move(words));
    }
  };

  char32_t prev = ' ';
  std::size_t pos = 0;
  while (pos < text.size()) {
    const CodePoint c = decode_utf8(text, pos);
    const std::size_t after = pos + c.len;
    const char32_t next = after < text.size() ? decode_utf8(text, after).cp : U' ';
    const bool prev_word = is_word_codepoint(prev);
    const bool next_word = is_word_codepoint(next);
    const bool next_space = next == U' ' || next == U'\n' || next == U'\t' || next == U'\r';
    // Whitespace or opening punctuation before a quote mark makes it an opener.
    const bool prev_boundary = prev == U' ' || prev == U'\n' || prev == U'\t' || prev == U'\r' ||
                               prev == U'(' || prev == U'[' || prev == U'{' || prev == U'"' ||
                               prev == U'“' || prev == U'‘' || prev == U'—' || prev == U'–';

    switch (c.cp) {
      case U'“':
        stack.push_back({QuoteKind::double_quote, after, pos});
        break;
      case U'”':
        close(QuoteKind::double_quote, pos, true);
        break;
      case U'‘':
        stack.push_back({QuoteKind::single_quote, after, pos});
        break;
      case U'"': {
        const bool have_open = std::any_of(stack.begin(), stack.end(), [](const OpenQuote& q) {
          return q.kind == QuoteKind::double_quote;
        });
        if (have_open && !prev_boundary) {
          close(QuoteKind::double_quote, pos, true);
        } else if (!next_space) {
          stack.push_back({QuoteKind::double_quote, after, pos});
        } else if (have_open) {
          close(QuoteKind::double_quote, pos, true);
        } else {
          out.warnings.push_back("stray double quote at byte " + std::to_string(pos));
        }
        break;
      }
      case U'\'':
      case U'’':
        if (prev_word && next_word) break;  // apostrophe inside a word
        if (prev_boundary) {
          if (c.cp == U'\'' && !next_space) stack.push_back({QuoteKind::single_quote, after, pos});
        } else {
          // After a word or punctuation: a closer, or else a possessive.
          close(QuoteKind::single_quote, pos, false);
        }
        break;
      default:
        break;
    }
    prev = c.cp;
    pos = after;
  }
  for (const auto& q : stack)
    out.warnings.push_back("unmatched opening quote at byte " + std::to_string(q.at));
  return out;
}

CitedText::CitedText(std::string_view text, std::size_t shingle) : shingle_(shingle) {
  const auto toks = normalized_tokens(text);
  if (toks.size() < shingle_) return;
  for (std::size_t i = 0; i + shingle_ <= toks.size(); ++i) runs_.insert(join_run(toks, i, shingle_));
}

bool CitedText::contains_run(std::span<const std::string> normalized, std::size_t start) const {
  if (start + shingle_ > normalized.size()) return false;
  return runs_.count(join_run(normalized, start, shingle_)) > 0;
}

bool flag_chunk(const Chunk& citing_chunk, const CitedText& cited, const CitationLink& link) {
  std::vector<std::string> chunk_tokens;
  chunk_tokens.reserve(citing_chunk.tokens.size());
  for (const auto& t : citing_chunk.tokens) chunk_tokens.push_back(normalize_token(t));
  for (const auto& name : link.cited_author_last_names) {
    if (contains_sequence(chunk_tokens, normalized_tokens(name))) return true;
  }
  const auto quotes = extract_quotes(citing_chunk.text).quotes;
  for (const auto& q : quotes) {
    if (q.size() < cited.shingle()) continue;
    std::vector<std::string> norm;
    norm.reserve(q.size());
    for (const auto& t : q) norm.push_back(normalize_token(t));
    for (std::size_t i = 0; i + cited.shingle() <= norm.size(); ++i) {
      if (cited.contains_run(norm, i)) return true;
    }
  }
  return false;
}

bool flag_chunk(const Chunk& citing_chunk, const DocumentRecord& cited_doc, const CitationLink& link) {
  return flag_chunk(citing_chunk, CitedText(cited_doc.text), link);
}

bool ExclusionSet::docs_share_author(const std::string& a, const std::string& b) const {
  auto it = coauthors_.find(a);
  return it != coauthors_.end() && it->second.count(b) > 0;
}

bool ExclusionSet::excluded(std::string_view chunk_a, std::string_view chunk_b) const {
  auto da = chunk_doc_.find(std::string(chunk_a));
  auto db = chunk_doc_.find(std::string(chunk_b));
  if (da == chunk_doc_.end() || db == chunk_doc_.end()) return false;
  if (docs_share_author(da->second, db->second)) return true;
  if (auto f = flagged_.find(da->first); f != flagged_.end() && f->second.count(db->second)) return true;
  if (auto f = flagged_.find(db->first); f != flagged_.end() && f->second.count(da->second)) return true;
  return false;
}

std::vector<std::string> ExclusionSet::excluded_docs(std::string_view chunk_id) const {
  std::set<std::string> docs;
  auto d = chunk_doc_.find(std::string(chunk_id));
  if (d == chunk_doc_.end()) return {};
  if (auto c = coauthors_.find(d->second); c != coauthors_.end()) docs.insert(c->second.begin(), c->second.end());
  if (auto f = flagged_.find(d->first); f != flagged_.end()) docs.insert(f->second.begin(), f->second.end());
  return {docs.begin(), docs.end()};
}

std::vector<std::string> ExclusionSet::chunks_flagged_against(std::string_view doc_id) const {
  auto it = flagged_against_.find(std::string(doc_id));
  if (it == flagged_against_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

std::set<std::pair<std::string, std::string>> ExclusionSet::excluded_chunk_pairs() const {
  std::set<std::pair<std::string, std::string>> pairs;
  auto add = [&](const std::string& a, const std::string& b) {
    if (a == b) return;
    pairs.insert(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
  };
  for (const auto& [doc, others] : coauthors_) {
    auto mine = doc_chunks_.find(doc);
    if (mine == doc_chunks_.end()) continue;
    for (const auto& other : others) {
      auto theirs = doc_chunks_.find(other);
      if (theirs == doc_chunks_.end()) continue;
      for (const auto& a : mine->second)
        for (const auto& b : theirs->second) add(a, b);
    }
  }
  for (const auto& [chunk, cited_docs] : flagged_) {
    for (const auto& doc : cited_docs) {
      auto theirs = doc_chunks_.find(doc);
      if (theirs == doc_chunks_.end()) continue;
      for (const auto& b : theirs->second) add(chunk, b);
    }
  }
  return pairs;
}

ExclusionSet build_exclusions(std::span<const Chunk> chunks, std::span<const CitationLink> links,
                              std::span<const DocumentRecord> docs) {
  ExclusionSet ex;
  for (const auto& c : chunks) {
    ex.chunk_doc_[c.chunk_id] = c.doc_id;
    ex.doc_chunks_[c.doc_id].push_back(c.chunk_id);
  }

  std::unordered_map<std::string, const DocumentRecord*> by_id;
  std::map<std::string, std::vector<std::string>> docs_by_author;
  for (const auto& d : docs) {
    by_id[d.doc_id] = &d;
    for (const auto& a : d.author_ids) docs_by_author[a].push_back(d.doc_id);
  }
  for (const auto& [author, ids] : docs_by_author) {
    for (const auto& a : ids)
      for (const auto& b : ids)
        if (a != b) ex.coauthors_[a].insert(b);
  }

  for (const auto& link : links) {
    if (link.citing_doc_id == link.cited_doc_id)
      throw DataError("citation link from " + link.citing_doc_id + " to itself");
    auto cited = by_id.find(link.cited_doc_id);
    auto citing_chunks = ex.doc_chunks_.find(link.citing_doc_id);
    if (cited == by_id.end() || citing_chunks == ex.doc_chunks_.end()) continue;
    const CitedText cited_text(cited->second->text);
    auto& flagged_for_link = ex.per_link_[link];
    for (const auto& c : chunks) {
      if (c.doc_id != link.citing_doc_id) continue;
      if (flag_chunk(c, cited_text, link)) {
        ex.flagged_[c.chunk_id].insert(link.cited_doc_id);
        ex.flagged_against_[link.cited_doc_id].insert(c.chunk_id);
        flagged_for_link.insert(c.chunk_id);
      }
    }
  }
  return ex;
}

std::vector<CitationLink> read_citation_links(const std::filesystem::path& path) {
  std::vector<CitationLink> links;
  if (path.extension() == ".jsonl" || path.extension() == ".json") {
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        CitationLink l;
        l.citing_doc_id = j.at("citing_doc_id").get<std::string>();
        l.cited_doc_id = j.at("cited_doc_id").get<std::string>();
        if (j.contains("cited_author_last_names"))
          l.cited_author_last_names = j["cited_author_last_names"].get<std::vector<std::string>>();
        links.push_back(std::move(l));
      } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    return links;
  }
  const CsvTable t = read_csv(path);
  const auto ci = t.column("citing_doc_id");
  const auto cd = t.column("cited_doc_id");
  const auto cn = t.column("cited_author_last_names");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.header.size())
      throw DataError(path.string() + " line " + std::to_string(t.line_numbers[r]) + ": wrong field count");
    CitationLink l{row[ci], row[cd], {}};
    std::istringstream names(row[cn]);
    std::string name;
    while (std::getline(names, name, ';')) {
      if (!name.empty()) l.cited_author_last_names.push_back(name);
    }
    links.push_back(std::move(l));
  }
  return links;
}

}  // namespace precocity
