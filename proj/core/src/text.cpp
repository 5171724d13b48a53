#include "textrepair/text.hpp"

#include <cctype>
#include <stdexcept>

namespace textrepair {

namespace {

bool ascii_punct(unsigned char c) { return std::ispunct(c) != 0; }
bool ascii_alnum(unsigned char c) { return std::isalnum(c) != 0; }

bool contains_word_char(std::string_view s) {
  for (unsigned char c : s) {
    if (ascii_alnum(c) || c >= 0x80) return true;
  }
  return false;
}

Token make_token(std::string_view raw, std::size_t begin, std::size_t end) {
  Token t;
  t.surface = std::string(raw.substr(begin, end - begin));
  t.normalized = normalize_token(t.surface);
  t.begin = begin;
  t.end = end;
  t.is_word = contains_word_char(t.surface);
  return t;
}

// Emit the tokens of one non-whitespace chunk [begin, end): peel leading
// and trailing ASCII punctuation one character at a time, keep the middle
// as a single token.
void emit_chunk(std::string_view raw, std::size_t begin, std::size_t end,
                std::vector<Token>& out) {
  std::size_t core_b = begin;
  std::size_t core_e = end;
  while (core_b < core_e && ascii_punct(static_cast<unsigned char>(raw[core_b]))) {
    ++core_b;
  }
  while (core_e > core_b && ascii_punct(static_cast<unsigned char>(raw[core_e - 1]))) {
    --core_e;
  }
  for (std::size_t i = begin; i < core_b; ++i) out.push_back(make_token(raw, i, i + 1));
  if (core_b < core_e) out.push_back(make_token(raw, core_b, core_e));
  for (std::size_t i = core_e; i < end; ++i) out.push_back(make_token(raw, i, i + 1));
}

void tokenize_into(std::string_view text, std::size_t offset,
                   std::vector<Token>& out) {
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t start = i;
    char32_t cp = next_codepoint(text, i);
    if (is_space_codepoint(cp)) continue;
    // Extend the chunk until the next whitespace codepoint.
    std::size_t chunk_end = i;
    while (i < text.size()) {
      std::size_t probe = i;
      cp = next_codepoint(text, probe);
      if (is_space_codepoint(cp)) break;
      i = probe;
      chunk_end = i;
    }
    std::vector<Token> chunk;
    emit_chunk(text, start, chunk_end, chunk);
    for (Token& t : chunk) {
      t.begin += offset;
      t.end += offset;
      out.push_back(std::move(t));
    }
  }
}

bool all_whitespace(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_space_codepoint(next_codepoint(s, i))) return false;
  }
  return true;
}

}  // namespace

std::string normalize_token(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool is_space_codepoint(char32_t cp) {
  switch (cp) {
    case U'\t': case U'\n': case U'\v': case U'\f': case U'\r': case U' ':
    case 0x0085: case 0x00A0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

char32_t next_codepoint(std::string_view s, std::size_t& i) {
  const unsigned char b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
  else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
  else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
  else { ++i; return b0; }  // stray continuation / invalid lead byte
  if (i + len > s.size()) { ++i; return b0; }
  for (int k = 1; k < len; ++k) {
    const unsigned char bk = static_cast<unsigned char>(s[i + k]);
    if ((bk & 0xC0) != 0x80) { ++i; return b0; }
    cp = (cp << 6) | (bk & 0x3F);
  }
  i += len;
  return cp;
}

std::size_t Document::token_count() const {
  std::size_t n = 0;
  for (const Sentence& s : sentences) n += s.tokens.size();
  return n;
}

const Token& Document::token_at(std::size_t flat) const {
  for (const Sentence& s : sentences) {
    if (flat < s.tokens.size()) return s.tokens[flat];
    flat -= s.tokens.size();
  }
  throw std::out_of_range("token_at: flat index past end of document");
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  tokenize_into(text, 0, out);
  return out;
}

Document split_sentences(std::string_view text) {
  Document doc;
  doc.raw = std::string(text);
  if (text.empty()) return doc;

  // Candidate boundaries: the position right after '.', '!' or '?' when a
  // whitespace codepoint follows.
  std::vector<std::size_t> cuts;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    ++i;
    if (c != '.' && c != '!' && c != '?') continue;
    if (i >= text.size()) continue;
    std::size_t probe = i;
    if (is_space_codepoint(next_codepoint(text, probe))) cuts.push_back(i);
  }

  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t start = 0;
  for (std::size_t cut : cuts) {
    if (cut <= start) continue;
    spans.emplace_back(start, cut);
    start = cut;
  }
  if (start < text.size()) spans.emplace_back(start, text.size());

  // A trailing chunk of pure whitespace is not a sentence; keep folding it
  // into its predecessor.
  while (spans.size() > 1 &&
         all_whitespace(text.substr(spans.back().first,
                                    spans.back().second - spans.back().first))) {
    spans[spans.size() - 2].second = spans.back().second;
    spans.pop_back();
  }

  for (auto [b, e] : spans) {
    Sentence s;
    s.begin = b;
    s.end = e;
    tokenize_into(text.substr(b, e - b), b, s.tokens);
    doc.sentences.push_back(std::move(s));
  }
  return doc;
}

std::string detokenize(const Document& doc, const std::vector<std::string>& repl) {
  if (repl.size() != doc.token_count()) {
    throw std::invalid_argument("detokenize: surface count != token count");
  }
  std::string out;
  out.reserve(doc.raw.size() + 16);
  std::size_t cursor = 0;  // byte position in raw up to which we've copied
  std::size_t flat = 0;
  for (const Sentence& sent : doc.sentences) {
    bool first_word_pending = true;
    for (const Token& tok : sent.tokens) {
      out.append(doc.raw, cursor, tok.begin - cursor);  // the gap before
      std::string piece = repl[flat];
      if (tok.is_word && first_word_pending) {
        first_word_pending = false;
        if (piece != tok.surface && !piece.empty() && !tok.surface.empty()) {
          char orig0 = tok.surface[0];
          char new0 = piece[0];
          if (orig0 >= 'A' && orig0 <= 'Z' && new0 >= 'a' && new0 <= 'z') {
            piece[0] = static_cast<char>(new0 - 'a' + 'A');
          }
        }
      }
      out += piece;
      cursor = tok.end;
      ++flat;
    }
  }
  out.append(doc.raw, cursor, doc.raw.size() - cursor);  // trailing whitespace
  return out;
}

std::vector<std::string> surfaces(const Document& doc) {
  std::vector<std::string> out;
  out.reserve(doc.token_count());
  for (const Sentence& s : doc.sentences) {
    for (const Token& t : s.tokens) out.push_back(t.surface);
  }
  return out;
}

std::vector<TokenRef> word_tokens(const Document& doc) {
  std::vector<TokenRef> out;
  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    const auto& toks = doc.sentences[si].tokens;
    for (std::size_t ti = 0; ti < toks.size(); ++ti) {
      if (toks[ti].is_word) out.push_back({si, ti});
    }
  }
  return out;
}

std::size_t flat_index(const Document& doc, const TokenRef& ref) {
  std::size_t n = 0;
  for (std::size_t si = 0; si < ref.sentence; ++si) {
    n += doc.sentences[si].tokens.size();
  }
  return n + ref.token;
}

std::string sentence_without_token(const Document& doc, std::size_t sentence,
                                   std::size_t token) {
  const Sentence& s = doc.sentences.at(sentence);
  const Token& t = s.tokens.at(token);
  std::string out;
  if (token > 0) {
    // Delete the token plus the gap before it.
    std::size_t prev_end = s.tokens[token - 1].end;
    out.append(doc.raw, s.begin, prev_end - s.begin);
    out.append(doc.raw, t.end, s.end - t.end);
  } else if (s.tokens.size() > 1) {
    // Opening token: delete it plus the gap after it.
    std::size_t next_begin = s.tokens[1].begin;
    out.append(doc.raw, s.begin, t.begin - s.begin);
    out.append(doc.raw, next_begin, s.end - next_begin);
  } else {
    out.append(doc.raw, s.begin, t.begin - s.begin);
    out.append(doc.raw, t.end, s.end - t.end);
  }
  return out;
}

std::string_view sentence_text(const Document& doc, std::size_t sentence) {
  const Sentence& s = doc.sentences.at(sentence);
  return std::string_view(doc.raw).substr(s.begin, s.end - s.begin);
}

}  // namespace textrepair
