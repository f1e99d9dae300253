#include "precocity/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <string_view>

namespace precocity {
namespace {

using Decoded = CodePoint;

Decoded decode(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return {b0, 1};
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0)
      return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0)
      return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
  }
  // Stray byte: count it as an opaque word character.
  return {0xFFFD, 1};
}

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
         cp == 0x00A0 || (cp >= 0x2000 && cp <= 0x200B) || cp == 0x3000;
}

bool is_punct_nonascii(char32_t cp) {
  if (cp >= 0x00A1 && cp <= 0x00BF) return cp != 0x00AA && cp != 0x00B5 && cp != 0x00BA;
  if (cp == 0x00D7 || cp == 0x00F7) return true;
  if (cp >= 0x2010 && cp <= 0x206F) return true;
  if (cp >= 0x3000 && cp <= 0x303F) return true;
  return false;
}

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
  }
  return !is_space(cp) && !is_punct_nonascii(cp);
}

bool is_letter(char32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  return is_word_char(cp);
}

bool is_apostrophe(char32_t cp) { return cp == '\'' || cp == 0x2019; }

bool is_terminal(char32_t cp) { return cp == '.' || cp == '!' || cp == '?' || cp == 0x2026; }

bool is_closer(char32_t cp) {
  return cp == '"' || cp == '\'' || cp == ')' || cp == ']' || cp == '}' || cp == 0x2019 ||
         cp == 0x201D || cp == 0x00BB;
}

constexpr std::array<std::string_view, 38> kAbbreviations = {
    "mr",  "mrs", "ms",  "dr",   "prof", "st",  "jr",  "sr",  "vs",  "no",
    "cf",  "al",  "fig", "vol",  "pp",   "ed",  "eds", "co",  "inc", "ltd",
    "gen", "col", "capt", "rev", "hon",  "lt",  "sgt", "jan", "feb", "mar",
    "apr", "jun", "jul", "aug",  "sep",  "sept", "oct", "nov"};

bool is_abbreviation(std::string_view lower) {
  if (lower == "dec" || lower == "ch" || lower == "sec") return true;
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) != kAbbreviations.end();
}

}  // namespace

CodePoint decode_utf8(std::string_view text, std::size_t pos) { return decode(text, pos); }

bool is_word_codepoint(char32_t cp) { return is_word_char(cp); }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

TokenizedText tokenize(std::string_view text) {
  TokenizedText out;
  const std::size_t n = text.size();
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t sentence_first_token = 0;
  std::size_t sentence_byte_begin = npos;
  std::size_t last_nonspace_end = 0;

  auto close_sentence = [&](std::size_t byte_end) {
    if (out.tokens.size() > sentence_first_token) {
      out.sentence_ends.push_back(out.tokens.size());
      out.sentence_bytes.emplace_back(sentence_byte_begin, byte_end);
      sentence_first_token = out.tokens.size();
      sentence_byte_begin = npos;
    }
  };

  std::size_t pos = 0;
  while (pos < n) {
    const Decoded d = decode(text, pos);
    if (!is_space(d.cp) && sentence_byte_begin == npos) sentence_byte_begin = pos;

    if (is_word_char(d.cp)) {
      const std::size_t begin = pos;
      pos += d.len;
      while (pos < n) {
        const Decoded e = decode(text, pos);
        if (is_word_char(e.cp)) {
          pos += e.len;
          continue;
        }
        if (is_apostrophe(e.cp) && pos + e.len < n && is_letter(decode(text, pos + e.len).cp)) {
          pos += e.len;
          continue;
        }
        break;
      }
      out.tokens.push_back({std::string(text.substr(begin, pos - begin)), begin, pos});
      last_nonspace_end = pos;
      continue;
    }

    if (is_terminal(d.cp)) {
      std::size_t q = pos + d.len;
      while (q < n) {
        const Decoded e = decode(text, q);
        if (!is_terminal(e.cp) && !is_closer(e.cp)) break;
        q += e.len;
      }
      last_nonspace_end = q;
      bool boundary = q == n || is_space(decode(text, q).cp);
      if (boundary && d.cp == '.') {
        if (!out.tokens.empty() && out.tokens.back().end == pos) {
          const std::string lower = lowercase(out.tokens.back().text);
          const bool initial = lower.size() == 1 && is_letter(static_cast<unsigned char>(lower[0]));
          if (initial || is_abbreviation(lower)) boundary = false;
        }
        std::size_t r = q;
        while (r < n && is_space(decode(text, r).cp)) r += decode(text, r).len;
        if (r < n && text[r] >= 'a' && text[r] <= 'z') boundary = false;
      }
      if (boundary) close_sentence(q);
      pos = q;
      continue;
    }

    if (d.cp == '\n') {
      std::size_t r = pos + 1;
      while (r < n && (text[r] == ' ' || text[r] == '\t' || text[r] == '\r')) ++r;
      if (r < n && text[r] == '\n') close_sentence(last_nonspace_end);
    }
    if (!is_space(d.cp)) last_nonspace_end = pos + d.len;
    pos += d.len;
  }
  close_sentence(last_nonspace_end);
  return out;
}

std::vector<std::string> word_tokens(std::string_view text) {
  auto t = tokenize(text);
  std::vector<std::string> out;
  out.reserve(t.tokens.size());
  for (auto& tok : t.tokens) out.push_back(std::move(tok.text));
  return out;
}

std::string normalize_token(std::string_view token) {
  std::string w = lowercase(token);
  // Typographic apostrophe folds onto the ASCII one.
  std::size_t at;
  while ((at = w.find("\xE2\x80\x99")) != std::string::npos) w.replace(at, 3, "'");
  return w;
}

std::vector<std::string> normalized_tokens(std::string_view text) {
  auto words = word_tokens(text);
  for (auto& w : words) w = normalize_token(w);
  return words;
}

}  // namespace precocity
