#include "support/e2e_fixture.hpp"

#include <cstdio>
#include <sstream>

#include "textrepair/rand.hpp"
#include "textrepair/text.hpp"

namespace trtest {

using namespace textrepair;

namespace {

constexpr int kDim = 32;
constexpr int kWordsPerClass = 15;
constexpr int kTwinsPerClass = 10;
constexpr double kPrivate = 12.0;  // per-word private-axis magnitude
constexpr double kTwinPull = 9.0;  // twin's opposite-class polarity

std::string word_name(const char* prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%02d", prefix, i);
  return buf;
}

void append_vector(std::ostringstream& out, const std::string& token,
                   double polarity, int private_axis, double private_value) {
  out << token;
  for (int d = 0; d < kDim; ++d) {
    double v = d == 0 ? polarity : (d == private_axis ? private_value : 0.0);
    out << ' ' << v;
  }
  out << '\n';
}

}  // namespace

std::string e2e_embedding_text() {
  // Private axes: word i of the + class owns axis 1+i, word i of the - class
  // owns axis 16+i.  A twin shares its host's axis, so host->twin swaps move
  // only the polarity coordinate.
  std::ostringstream out;
  for (int i = 0; i < kWordsPerClass; ++i) {
    append_vector(out, word_name("aw", i), 1.0, 1 + i, kPrivate);
  }
  for (int i = 0; i < kTwinsPerClass; ++i) {
    append_vector(out, word_name("at", i), -kTwinPull, 1 + i, kPrivate);
  }
  for (int i = 0; i < kWordsPerClass; ++i) {
    append_vector(out, word_name("bw", i), -1.0, 16 + i, kPrivate);
  }
  for (int i = 0; i < kTwinsPerClass; ++i) {
    append_vector(out, word_name("bt", i), kTwinPull, 16 + i, kPrivate);
  }
  return out.str();
}

std::vector<LabeledText> e2e_corpus(std::uint64_t seed, int per_class) {
  std::vector<LabeledText> out;
  Rng rng(seed);
  for (int side = 0; side < 2; ++side) {
    const char* prefix = side == 0 ? "aw" : "bw";
    const char* other = side == 0 ? "bw" : "aw";
    const char* label = side == 0 ? "pos" : "neg";
    for (int n = 0; n < per_class; ++n) {
      std::vector<int> ids(kWordsPerClass);
      for (int i = 0; i < kWordsPerClass; ++i) ids[i] = i;
      rng.shuffle(ids);
      const std::size_t k = 6 + rng.uniform_index(4);  // 6..9 distinct words
      // A third of the texts carry one word from the other side, so no word
      // is a perfectly one-sided class feature and clean texts span a range
      // of polarity evidence instead of all sitting at full strength -- like
      // real corpora, where individual words recur in both classes.
      const bool noisy = rng.uniform_real() < 0.35;
      std::vector<std::string> words;
      for (std::size_t i = 0; i < k; ++i) words.push_back(word_name(prefix, ids[i]));
      if (noisy) words[k - 1] = word_name(other, int(rng.uniform_index(kWordsPerClass)));
      rng.shuffle(words);
      std::string text;
      for (const std::string& w : words) {
        if (!text.empty()) text += ' ';
        text += w;
      }
      text += '.';
      out.push_back({text, label});
    }
  }
  return out;
}

E2eFixture make_e2e_fixture() {
  E2eFixture fx;
  std::istringstream in(e2e_embedding_text());
  fx.store = std::make_shared<const EmbeddingStore>(EmbeddingStore::load(in));
  fx.corpus = e2e_corpus(17, 200);

  // Same task, different sharpness: f1 trains long at a high rate and
  // saturates its confidences; f2 stops early at a low rate and stays soft.
  // Adversarial inputs fool both (transferability through the shared mean
  // feature), but the models' confidence gap diverges there.
  TrainConfig sharp;
  sharp.epochs = 400;
  sharp.learning_rate = 2.0;
  sharp.seed = 1;
  TrainConfig soft;
  soft.epochs = 40;
  soft.learning_rate = 0.05;
  soft.seed = 2;
  fx.f1 = std::make_shared<BuiltinClassifier>(
      "sharp", train_builtin(fx.corpus, *fx.store, sharp), fx.store);
  fx.f2 = std::make_shared<BuiltinClassifier>(
      "soft", train_builtin(fx.corpus, *fx.store, soft), fx.store);
  fx.names = fx.f1->label_names();
  return fx;
}

std::optional<std::string> greedy_attack(const std::string& text, int true_label,
                                         const Classifier& victim,
                                         const EmbeddingStore& store, int L,
                                         int max_rounds) {
  std::string current = text;
  for (int round = 0; round < max_rounds; ++round) {
    const Document doc = split_sentences(current);
    const std::vector<std::string> base = surfaces(doc);
    double best_p = victim.classify(current).probs[true_label];
    std::optional<std::string> best;

    for (const TokenRef& ref : word_tokens(doc)) {
      const Token& tok = doc.sentences[ref.sentence].tokens[ref.token];
      for (const SynonymEntry& syn : nearest_synonyms(store, tok.normalized, L)) {
        std::vector<std::string> pieces = base;
        pieces[flat_index(doc, ref)] = syn.token;
        std::string candidate = detokenize(doc, pieces);
        const double p = victim.classify(candidate).probs[true_label];
        if (p < best_p) {
          best_p = p;
          best = std::move(candidate);
        }
      }
    }
    if (!best) return std::nullopt;  // no substitution lowers the target
    current = *best;
    if (label_of(victim.classify(current)) != true_label) return current;
  }
  return std::nullopt;
}

}  // namespace trtest
