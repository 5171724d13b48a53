#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace textrepair {

// One whitespace-delimited unit of text.  Leading/trailing ASCII punctuation
// is peeled off into single-character tokens of its own, so "Hello," becomes
// ["Hello", ","].  Byte spans point into the raw string the token came from.
struct Token {
  std::string surface;     // exact bytes from the source text
  std::string normalized;  // surface with ASCII letters lowercased
  std::size_t begin = 0;   // [begin, end) byte span in the raw text
  std::size_t end = 0;
  bool is_word = false;    // contains an ASCII alnum or any non-ASCII char
};

struct Sentence {
  std::vector<Token> tokens;  // spans are absolute into Document::raw
  std::size_t begin = 0;      // [begin, end) byte span in the raw text
  std::size_t end = 0;
};

// Sentence spans partition [0, raw.size()); token spans cover every
// non-whitespace byte exactly once, in order.
struct Document {
  std::string raw;
  std::vector<Sentence> sentences;

  std::size_t token_count() const;
  // Token by flat index across sentences. Throws std::out_of_range.
  const Token& token_at(std::size_t flat) const;
};

// Position of a token inside a document.
struct TokenRef {
  std::size_t sentence = 0;
  std::size_t token = 0;
  bool operator==(const TokenRef&) const = default;
};

// True for ASCII whitespace and the common Unicode space/separator
// codepoints (NBSP, en/em spaces, line/paragraph separators, ...).
bool is_space_codepoint(char32_t cp);

// ASCII-lowercase copy; bytes outside A-Z pass through untouched.
std::string normalize_token(std::string_view s);

// Decode one UTF-8 codepoint starting at byte i; advances i past it.
// Invalid bytes are returned as themselves so tokenization stays total.
char32_t next_codepoint(std::string_view s, std::size_t& i);

std::vector<Token> tokenize(std::string_view text);

// Tokenize and group into sentences.  A sentence closes after '.', '!'
// or '?' when whitespace follows and there is still non-whitespace text
// afterwards; trailing whitespace sticks to the last sentence.
Document split_sentences(std::string_view text);

// Rebuild text from a document with one replacement surface per token
// (order = flat token order).  Unchanged tokens keep their exact original
// spacing; replaced tokens inherit the spacing around the original.  When
// the first word of a sentence is replaced by a lowercase word and the
// original started with an ASCII capital, the capital carries over.
// Throws std::invalid_argument when surfaces.size() != token_count().
std::string detokenize(const Document& doc, const std::vector<std::string>& surfaces);

// Flat surfaces of every token, in order.
std::vector<std::string> surfaces(const Document& doc);

// Refs to the word tokens (is_word == true), in order.
std::vector<TokenRef> word_tokens(const Document& doc);

std::size_t flat_index(const Document& doc, const TokenRef& ref);

// The sentence's text with one token deleted.  The gap left behind is
// collapsed: the whitespace before the token goes with it (or after it,
// when the token opens the sentence).
std::string sentence_without_token(const Document& doc, std::size_t sentence,
                                   std::size_t token);

// Text of one sentence (its exact raw span).
std::string_view sentence_text(const Document& doc, std::size_t sentence);

}  // namespace textrepair
