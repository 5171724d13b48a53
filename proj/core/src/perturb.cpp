#include "textrepair/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace textrepair {

UnperturbableError::~UnperturbableError() = default;

void PerturbConfig::validate() const {
  if (budget < 1) throw ConfigError("budget must be >= 1");
  if (synonyms_per_word < 1) throw ConfigError("synonyms_per_word (L) must be >= 1");
  if (method == PerturbMethod::BackTranslation) {
    if (languages.empty()) {
      throw ConfigError("back-translation needs at least one target language");
    }
    if (source_language.empty()) throw ConfigError("source language is empty");
    std::set<std::string> uniq;
    for (const std::string& l : languages) {
      if (l.empty()) throw ConfigError("empty language code");
      if (l == source_language) {
        throw ConfigError("target language equals the source language: " + l);
      }
      if (!uniq.insert(l).second) throw ConfigError("duplicate language code: " + l);
    }
  } else {
    if (max_substitutions < 1) {
      throw ConfigError("max_substitutions (g) must be >= 1 for substitution methods");
    }
  }
}

namespace {

// A word can be substituted when it is in vocabulary and the vocabulary
// holds at least one other entry (nearest_synonyms would be non-empty).
bool substitutable(const Token& tok, const EmbeddingStore& store) {
  return store.size() >= 2 && store.contains(tok.normalized);
}

// Replace the chosen positions with synonyms drawn uniformly from each
// word's top-L list, in the order given.
std::string substitute_positions(const Document& doc,
                                 const std::vector<TokenRef>& positions,
                                 int top_l, const EmbeddingStore& store,
                                 Rng& rng) {
  std::vector<std::string> out = surfaces(doc);
  for (const TokenRef& ref : positions) {
    const Token& tok = doc.sentences[ref.sentence].tokens[ref.token];
    SynonymList syns = nearest_synonyms(store, tok.normalized, top_l);
    if (syns.empty()) continue;  // callers pre-filter; defensive
    const SynonymEntry& pick = syns[rng.uniform_index(syns.size())];
    out[flat_index(doc, ref)] = pick.token;
  }
  return detokenize(doc, out);
}

}  // namespace

std::string random_perturb(const Document& x, const PerturbConfig& config,
                           const EmbeddingStore& store, Rng& rng) {
  std::vector<TokenRef> candidates;
  for (const TokenRef& ref : word_tokens(x)) {
    if (substitutable(x.sentences[ref.sentence].tokens[ref.token], store)) {
      candidates.push_back(ref);
    }
  }
  if (candidates.empty()) {
    throw UnperturbableError("no substitutable word in input");
  }
  rng.shuffle(candidates);
  const std::size_t take =
      std::min(candidates.size(), static_cast<std::size_t>(config.max_substitutions));
  candidates.resize(take);
  return substitute_positions(x, candidates, config.synonyms_per_word, store, rng);
}

double sentence_importance(const Document& doc, std::size_t sentence,
                           const Classifier& f1, const Classifier& f2) {
  const std::string s(sentence_text(doc, sentence));
  return kl_divergence(f1.classify(s), f2.classify(s));
}

double word_importance(const Document& doc, std::size_t sentence,
                       std::size_t token, const Classifier& f1,
                       const Classifier& f2) {
  const Token& tok = doc.sentences.at(sentence).tokens.at(token);
  if (!tok.is_word) throw ConfigError("word_importance on a non-word token");
  const double base = sentence_importance(doc, sentence, f1, f2);
  const std::string without = sentence_without_token(doc, sentence, token);
  if (tokenize(without).empty()) {
    return base;  // deleting the only token: an empty fragment diverges by 0
  }
  const double reduced = kl_divergence(f1.classify(without), f2.classify(without));
  return base - reduced;
}

ImportanceRanking rank_importance(const Document& doc, const Classifier& f1,
                                  const Classifier& f2) {
  ImportanceRanking r;
  r.sentence_scores.reserve(doc.sentences.size());
  r.word_scores.resize(doc.sentences.size());
  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    // One base divergence per sentence, shared across its words (each word
    // then costs a single extra classification for the deleted fragment).
    const double base = sentence_importance(doc, si, f1, f2);
    r.sentence_scores.push_back(base);
    const auto& toks = doc.sentences[si].tokens;
    for (std::size_t ti = 0; ti < toks.size(); ++ti) {
      if (!toks[ti].is_word) continue;
      const std::string without = sentence_without_token(doc, si, ti);
      double score = base;
      if (!tokenize(without).empty()) {
        score -= kl_divergence(f1.classify(without), f2.classify(without));
      }
      r.word_scores[si].emplace_back(ti, score);
    }
  }
  return r;
}

std::vector<TokenRef> select_important_words(const Document& doc,
                                             const ImportanceRanking& ranking,
                                             std::size_t g,
                                             const EmbeddingStore& store) {
  // Sentences by descending score; stable so equal scores keep text order.
  std::vector<std::size_t> sentence_order(doc.sentences.size());
  std::iota(sentence_order.begin(), sentence_order.end(), 0);
  std::stable_sort(sentence_order.begin(), sentence_order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return ranking.sentence_scores[a] > ranking.sentence_scores[b];
                   });

  std::vector<TokenRef> selected;
  for (std::size_t si : sentence_order) {
    if (selected.size() >= g) break;
    auto words = ranking.word_scores[si];  // (token index, score), token order
    std::stable_sort(words.begin(), words.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& [ti, score] : words) {
      if (selected.size() >= g) break;
      if (substitutable(doc.sentences[si].tokens[ti], store)) {
        selected.push_back({si, ti});
      }
    }
  }
  return selected;
}

std::string importance_perturb(const Document& x, const PerturbConfig& config,
                               const Classifier& f1, const Classifier& f2,
                               const EmbeddingStore& store, Rng& rng) {
  ImportanceRanking ranking = rank_importance(x, f1, f2);
  std::vector<TokenRef> positions = select_important_words(
      x, ranking, static_cast<std::size_t>(config.max_substitutions), store);
  if (positions.empty()) throw UnperturbableError("no substitutable word in input");
  return substitute_positions(x, positions, config.synonyms_per_word, store, rng);
}

std::string back_translate(const std::string& x,
                           const std::vector<std::string>& chain,
                           const std::string& source_language,
                           Translator& translator) {
  if (chain.empty() || chain.size() > 2) {
    throw ConfigError("back-translation chain must have length 1 or 2");
  }
  // An empty reply on any leg means the provider dropped the text; surface
  // that as a protocol error instead of sending the empty string onward.
  std::string current = translator.translate(x, source_language, chain[0]);
  if (current.empty()) throw ProtocolError("empty round-trip translation");
  if (chain.size() == 2) {
    current = translator.translate(current, chain[0], chain[1]);
    if (current.empty()) throw ProtocolError("empty round-trip translation");
  }
  current = translator.translate(current, chain.back(), source_language);
  if (current.empty()) throw ProtocolError("empty round-trip translation");
  return current;
}

PerturbationStream::PerturbationStream(Document source, PerturbConfig config,
                                       PerturbContext ctx)
    : source_(std::move(source)),
      config_(std::move(config)),
      ctx_(std::move(ctx)),
      rng_(config_.seed) {
  config_.validate();
  switch (config_.method) {
    case PerturbMethod::Random:
      if (!ctx_.embeddings) throw ConfigError("substitution needs an embedding store");
      break;
    case PerturbMethod::Importance:
      if (!ctx_.embeddings) throw ConfigError("substitution needs an embedding store");
      if (!ctx_.f1 || !ctx_.f2) {
        throw ConfigError("importance-guided substitution needs both classifiers");
      }
      break;
    case PerturbMethod::BackTranslation: {
      if (ctx_.translator == nullptr) {
        throw ConfigError("back-translation needs a translator");
      }
      memo_ = std::make_unique<MemoizingTranslator>(*ctx_.translator);
      // Single-language chains in configured order, then ordered pairs in
      // nested index order, excluding equal legs.
      for (const std::string& d : config_.languages) chains_.push_back({d});
      for (const std::string& d1 : config_.languages) {
        for (const std::string& d2 : config_.languages) {
          if (d1 != d2) chains_.push_back({d1, d2});
        }
      }
      break;
    }
  }
  seen_.insert(source_.raw);
}

std::optional<std::string> PerturbationStream::generate() {
  switch (config_.method) {
    case PerturbMethod::Random:
      return random_perturb(source_, config_, *ctx_.embeddings, rng_);
    case PerturbMethod::Importance: {
      if (!ranked_) {
        ImportanceRanking ranking = rank_importance(source_, *ctx_.f1, *ctx_.f2);
        guided_positions_ = select_important_words(
            source_, ranking, static_cast<std::size_t>(config_.max_substitutions),
            *ctx_.embeddings);
        ranked_ = true;
      }
      if (guided_positions_.empty()) {
        throw UnperturbableError("no substitutable word in input");
      }
      return substitute_positions(source_, guided_positions_,
                                  config_.synonyms_per_word, *ctx_.embeddings,
                                  rng_);
    }
    case PerturbMethod::BackTranslation: {
      if (chain_index_ >= chains_.size()) return std::nullopt;
      const auto& chain = chains_[chain_index_++];
      return back_translate(source_.raw, chain, config_.source_language, *memo_);
    }
  }
  return std::nullopt;  // unreachable
}

std::optional<std::string> PerturbationStream::next() {
  if (exhausted_ || emitted_ >= config_.budget) return std::nullopt;

  // For the sampling engines the candidate space is unknown, so exhaustion
  // is declared after this many consecutive already-seen draws.
  constexpr int kConsecutiveSkipLimit = 100;

  int skips = 0;
  while (true) {
    std::optional<std::string> candidate;
    try {
      candidate = generate();
    } catch (const UnperturbableError&) {
      exhausted_ = true;
      return std::nullopt;
    }
    if (!candidate) {  // engine ran out of material (translation chains)
      exhausted_ = true;
      return std::nullopt;
    }
    if (seen_.insert(*candidate).second) {
      ++emitted_;
      return candidate;
    }
    // Duplicate or the source text itself: skip without consuming budget.
    if (config_.method == PerturbMethod::BackTranslation) continue;
    if (++skips >= kConsecutiveSkipLimit) {
      exhausted_ = true;
      return std::nullopt;
    }
  }
}

PerturbationStream open_stream(const Document& x, const PerturbConfig& config,
                               const PerturbContext& ctx) {
  return PerturbationStream(x, config, ctx);
}

}  // namespace textrepair
