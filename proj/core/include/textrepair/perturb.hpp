#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "textrepair/classifier.hpp"
#include "textrepair/detector.hpp"
#include "textrepair/embedding.hpp"
#include "textrepair/error.hpp"
#include "textrepair/rand.hpp"
#include "textrepair/services.hpp"
#include "textrepair/text.hpp"

namespace textrepair {

// The input offers nothing to substitute (no in-vocabulary word with an
// available synonym).  Streams treat this as exhaustion, not failure.
class UnperturbableError : public Error {
public:
  explicit UnperturbableError(const std::string& what) : Error(what) {}
  ~UnperturbableError() override;
};

enum class PerturbMethod {
  Random,           // uniform word choice + uniform synonym ("rp")
  Importance,       // divergence-guided word choice ("subw")
  BackTranslation,  // round-trip machine translation ("parap")
};

struct PerturbConfig {
  PerturbMethod method = PerturbMethod::Importance;
  int max_substitutions = 4;  // "g": word positions replaced per candidate
  int synonyms_per_word = 5;  // "L": ranked synonyms drawn from per position
  int budget = 650;           // candidates delivered before the stream stops
  std::vector<std::string> languages;  // round-trip targets, in order
  std::string source_language = "en";
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// External capabilities the engines draw on.  Embeddings + classifiers for
// the substitution methods, a translator for round-trip paraphrasing.  All
// pointers are non-owning views held by the caller for the stream's life.
struct PerturbContext {
  std::shared_ptr<const EmbeddingStore> embeddings;
  std::shared_ptr<const Classifier> f1;
  std::shared_ptr<const Classifier> f2;
  Translator* translator = nullptr;
};

// --- substitution engines -------------------------------------------------

// Replace up to `max_substitutions` uniformly chosen substitutable words
// with a synonym drawn uniformly from each word's top-L list.  Throws
// UnperturbableError when no word has an in-vocabulary synonym.
std::string random_perturb(const Document& x, const PerturbConfig& config,
                           const EmbeddingStore& store, Rng& rng);

// Divergence between the two models on one sentence, classified in
// isolation.
double sentence_importance(const Document& doc, std::size_t sentence,
                           const Classifier& f1, const Classifier& f2);

// How much of the sentence's divergence this word carries: the drop in
// divergence when the word is deleted.  Deleting the only token scores the
// full sentence divergence (an empty fragment has divergence zero).
double word_importance(const Document& doc, std::size_t sentence,
                       std::size_t token, const Classifier& f1,
                       const Classifier& f2);

struct ImportanceRanking {
  std::vector<double> sentence_scores;  // one per sentence
  // Per sentence: (token index, score) for each word token, in token order.
  std::vector<std::vector<std::pair<std::size_t, double>>> word_scores;
};

ImportanceRanking rank_importance(const Document& doc, const Classifier& f1,
                                  const Classifier& f2);

// The top-g substitutable word positions: sentences in descending score
// order (earlier sentence wins ties), words within a sentence in descending
// score order (earlier position wins ties).
std::vector<TokenRef> select_important_words(const Document& doc,
                                             const ImportanceRanking& ranking,
                                             std::size_t g,
                                             const EmbeddingStore& store);

// The guided counterpart of random_perturb: positions come from
// select_important_words (ranked once per document), synonyms are drawn
// uniformly from each position's top-L list.
std::string importance_perturb(const Document& x, const PerturbConfig& config,
                               const Classifier& f1, const Classifier& f2,
                               const EmbeddingStore& store, Rng& rng);

// Round-trip translation: source -> chain[0] (-> chain[1]) -> source.
// Chain length 1 or 2.  A two-language chain issues exactly three calls.
std::string back_translate(const std::string& x,
                           const std::vector<std::string>& chain,
                           const std::string& source_language,
                           Translator& translator);

// --- the candidate stream --------------------------------------------------

// Lazy, deduplicated candidate source.  Never yields the source text or a
// repeat; skipped candidates do not consume budget.  Ends at the budget, at
// engine exhaustion (back-translation chains run out; the substitution
// space stops producing fresh texts), or for unperturbable inputs.
class PerturbationStream {
public:
  PerturbationStream(Document source, PerturbConfig config, PerturbContext ctx);

  // Next fresh candidate, or nullopt once exhausted.  Transport errors from
  // remote backends propagate.
  std::optional<std::string> next();

  long long emitted() const { return emitted_; }
  bool exhausted() const { return exhausted_; }
  const std::string& source_text() const { return source_.raw; }

private:
  std::optional<std::string> generate();

  Document source_;
  PerturbConfig config_;
  PerturbContext ctx_;
  Rng rng_;
  std::unordered_set<std::string> seen_;
  long long emitted_ = 0;
  bool exhausted_ = false;

  // Importance ranking (computed on first use) for the guided method.
  bool ranked_ = false;
  std::vector<TokenRef> guided_positions_;

  // Chain cursor for back-translation.
  std::vector<std::vector<std::string>> chains_;
  std::size_t chain_index_ = 0;

  std::unique_ptr<MemoizingTranslator> memo_;
};

PerturbationStream open_stream(const Document& x, const PerturbConfig& config,
                               const PerturbContext& ctx);

}  // namespace textrepair
