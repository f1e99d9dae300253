#include <gtest/gtest.h>

#include "precocity/tokenizer.hpp"

using namespace precocity;

namespace {

std::vector<std::size_t> ends(std::string_view text) { return tokenize(text).sentence_ends; }

}  // namespace

TEST(Tokenizer, SplitsOnWhitespaceAndPunctuation) {
  EXPECT_EQ(word_tokens("Hello, world; it's (fine)."),
            (std::vector<std::string>{"Hello", "world", "it's", "fine"}));
}

TEST(Tokenizer, TokenSpansPointIntoSource) {
  const std::string text = "  Alpha beta-gamma";
  const auto t = tokenize(text);
  ASSERT_EQ(t.tokens.size(), 3u);
  for (const auto& tok : t.tokens) EXPECT_EQ(text.substr(tok.begin, tok.end - tok.begin), tok.text);
}

TEST(Tokenizer, SentenceBoundaries) {
  EXPECT_EQ(ends("One two. Three four! Five?"), (std::vector<std::size_t>{2, 4, 5}));
}

TEST(Tokenizer, AbbreviationsAndInitialsDoNotSplit) {
  EXPECT_EQ(ends("Mr. Smith met Dr. Jones. Then J. R. Ewing left."), (std::vector<std::size_t>{5, 10}));
}

TEST(Tokenizer, LowercaseContinuationDoesNotSplit) {
  EXPECT_EQ(ends("See the fig. three for details. Next."), (std::vector<std::size_t>{6, 7}));
  EXPECT_EQ(ends("It was ca. ten years."), (std::vector<std::size_t>{5}));
}

TEST(Tokenizer, ParagraphBreakEndsSentence) {
  EXPECT_EQ(ends("A heading\n\nBody text here."), (std::vector<std::size_t>{2, 5}));
  EXPECT_EQ(ends("no break\nacross a single newline."), (std::vector<std::size_t>{6}));
}

TEST(Tokenizer, ClosingQuoteStaysWithSentence) {
  const std::string text = "He said \"stop.\" Then left.";
  const auto t = tokenize(text);
  ASSERT_EQ(t.sentence_ends, (std::vector<std::size_t>{3, 5}));
  EXPECT_EQ(text.substr(t.sentence_bytes[0].first, t.sentence_bytes[0].second - t.sentence_bytes[0].first),
            "He said \"stop.\"");
}

TEST(Tokenizer, Utf8WordsAndTypographicApostrophe) {
  const auto words = normalized_tokens("Café naïve don\xE2\x80\x99t");
  EXPECT_EQ(words, (std::vector<std::string>{"caf\xC3\xA9", "na\xC3\xAFve", "don't"}));
}

TEST(Tokenizer, EmptyAndPunctuationOnly) {
  EXPECT_TRUE(tokenize("").tokens.empty());
  EXPECT_TRUE(tokenize(" ... !!! ").sentence_ends.empty());
}

TEST(Tokenizer, InvalidUtf8DecodesToReplacement) {
  const auto cp = decode_utf8("\xFF" "a", 0);
  EXPECT_EQ(cp.cp, U'�');
  EXPECT_EQ(cp.len, 1u);
}
