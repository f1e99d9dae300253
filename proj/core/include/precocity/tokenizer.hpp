#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace precocity {

// A word token with its byte span in the source text. Surface casing is
// preserved; callers lowercase where they need lexical identity.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct TokenizedText {
  std::vector<Token> tokens;
  // Exclusive token index at which each sentence ends, ascending.
  std::vector<std::size_t> sentence_ends;
  // Byte span of each sentence in the source, including surrounding quotes
  // and terminal punctuation.
  std::vector<std::pair<std::size_t, std::size_t>> sentence_bytes;
};

// Word tokenization on whitespace and punctuation plus a rule-based
// sentence splitter (terminal punctuation, abbreviation list, paragraph
// breaks). Letters, digits and any non-punctuation code point above ASCII
// are word characters; an apostrophe between letters stays in the word.
TokenizedText tokenize(std::string_view text);

// Just the surface tokens.
std::vector<std::string> word_tokens(std::string_view text);

struct CodePoint {
  char32_t cp;
  std::size_t len;
};

// Decodes the UTF-8 sequence at byte `pos`. Invalid bytes decode to U+FFFD
// with length 1.
CodePoint decode_utf8(std::string_view text, std::size_t pos);

bool is_word_codepoint(char32_t cp);

// ASCII lowercase; non-ASCII bytes are left untouched.
std::string lowercase(std::string_view s);

// Lowercase plus typographic-apostrophe folding.
std::string normalize_token(std::string_view token);

// Lowercased tokens with punctuation removed, the normal form used for
// quote matching and vocabulary lookup.
std::vector<std::string> normalized_tokens(std::string_view text);

}  // namespace precocity
