// Microbenchmarks for the paths the repair loop leans on: divergence math,
// synonym lookup, tokenization, the builtin classifier, the pair check, the
// sequential test, and guided candidate generation.

#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "textrepair/classifier.hpp"
#include "textrepair/detector.hpp"
#include "textrepair/embedding.hpp"
#include "textrepair/perturb.hpp"
#include "textrepair/rand.hpp"
#include "textrepair/text.hpp"
#include "textrepair/voting.hpp"

using namespace textrepair;

namespace {

constexpr int kDim = 32;

// Deterministic store of `n` words ("w0", "w1", ...) with unit-scale vectors.
std::shared_ptr<const EmbeddingStore> synthetic_store(std::size_t n) {
  Rng rng(n);
  std::ostringstream out;
  for (std::size_t i = 0; i < n; ++i) {
    out << 'w' << i;
    for (int d = 0; d < kDim; ++d)
      out << ' ' << (2.0 * rng.uniform_real() - 1.0);
    out << '\n';
  }
  std::istringstream in(out.str());
  return std::make_shared<const EmbeddingStore>(EmbeddingStore::load(in));
}

// Mean-embedding model that reads class polarity off axis 0.
std::shared_ptr<const Classifier> synthetic_model(std::shared_ptr<const EmbeddingStore> store,
                                                  double sharpness) {
  BuiltinModel m;
  m.dim = kDim;
  m.label_names = {"neg", "pos"};
  m.weights.assign(2 * kDim, 0.0);
  m.weights[0] = -sharpness;
  m.weights[kDim] = sharpness;
  m.bias = {0.0, 0.0};
  return std::make_shared<BuiltinClassifier>("bench", std::move(m), std::move(store));
}

std::string words_text(std::size_t n_words, std::size_t vocab) {
  std::string text;
  for (std::size_t i = 0; i < n_words; ++i) {
    if (i) text += ' ';
    text += 'w' + std::to_string(i % vocab);
    if (i % 8 == 7) text += '.';
  }
  return text;
}

void BM_KlDivergence(benchmark::State& state) {
  const std::size_t k = std::size_t(state.range(0));
  std::vector<double> p(k), q(k);
  for (std::size_t i = 0; i < k; ++i) {
    p[i] = 1.0 + double(i % 7);
    q[i] = 1.0 + double((i + 3) % 5);
  }
  clamp_and_renormalize(p);
  clamp_and_renormalize(q);
  for (auto _ : state) {
    double d = kl_divergence(p, q);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_KlDivergence)->RangeMultiplier(4)->Range(2, 128);

void BM_NearestSynonyms(benchmark::State& state) {
  auto store = synthetic_store(std::size_t(state.range(0)));
  for (auto _ : state) {
    SynonymList syn = nearest_synonyms(*store, "w17", 5);
    benchmark::DoNotOptimize(syn);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NearestSynonyms)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_SplitSentences(benchmark::State& state) {
  const std::string text = words_text(std::size_t(state.range(0)), 64);
  for (auto _ : state) {
    Document doc = split_sentences(text);
    benchmark::DoNotOptimize(doc);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SplitSentences)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

void BM_ClassifyBuiltin(benchmark::State& state) {
  auto store = synthetic_store(256);
  auto model = synthetic_model(store, 4.0);
  const std::string text = words_text(std::size_t(state.range(0)), 256);
  for (auto _ : state) {
    ProbVector p = model->classify(text);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_ClassifyBuiltin)->RangeMultiplier(4)->Range(16, 1024);

void BM_PairCheck(benchmark::State& state) {
  auto store = synthetic_store(256);
  DetectorConfig config{0.1, {synthetic_model(store, 4.0), synthetic_model(store, 1.0)}};
  const std::string text = words_text(64, 256);
  for (auto _ : state) {
    DetectionVerdict v = is_adversarial(text, config);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_PairCheck);

void BM_SequentialDecision(benchmark::State& state) {
  SprtParams params(0.1, 0.1, 0.8, 0.16);
  Rng rng(99);
  std::vector<int> labels(4096);
  for (auto& l : labels) l = rng.uniform_real() < 0.8 ? 0 : 1;
  std::size_t cursor = 0;
  for (auto _ : state) {
    SprtState walk;
    SprtOutcome o = SprtOutcome::Inconclusive;
    while (o == SprtOutcome::Inconclusive) {
      walk.observe(labels[cursor++ % labels.size()]);
      o = hyp_test(0, walk, params);
    }
    benchmark::DoNotOptimize(o);
  }
}
BENCHMARK(BM_SequentialDecision);

void BM_RankImportance(benchmark::State& state) {
  auto store = synthetic_store(256);
  auto f1 = synthetic_model(store, 4.0);
  auto f2 = synthetic_model(store, 1.0);
  const Document doc = split_sentences(words_text(24, 256));
  for (auto _ : state) {
    ImportanceRanking r = rank_importance(doc, *f1, *f2);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_RankImportance);

void BM_GuidedCandidate(benchmark::State& state) {
  auto store = synthetic_store(256);
  auto f1 = synthetic_model(store, 4.0);
  auto f2 = synthetic_model(store, 1.0);
  const Document doc = split_sentences(words_text(24, 256));
  PerturbConfig config;
  config.method = PerturbMethod::Importance;
  Rng rng(7);
  for (auto _ : state) {
    std::string candidate = importance_perturb(doc, config, *f1, *f2, *store, rng);
    benchmark::DoNotOptimize(candidate);
  }
}
BENCHMARK(BM_GuidedCandidate);

}  // namespace

BENCHMARK_MAIN();
