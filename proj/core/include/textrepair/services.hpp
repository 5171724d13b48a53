#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "textrepair/classifier.hpp"

namespace textrepair {

struct HttpOptions {
  std::chrono::milliseconds timeout{10000};
  int retries = 2;  // transport-level retries, so retries+1 attempts in total
  std::chrono::milliseconds backoff_base{100};
  std::chrono::milliseconds backoff_cap{2000};
  int max_in_flight = 8;  // per-client concurrent request bound
  std::uint64_t jitter_seed = 0;

  void validate() const;  // throws ConfigError
};

// A machine-translation backend: text in the source language -> text in the
// target language.  Implementations must be callable from several threads.
class Translator {
public:
  virtual ~Translator();
  // Throws ConfigError when from == to or text is empty; TransportError /
  // ProtocolError bubble up from remote implementations.
  virtual std::string translate(const std::string& text, const std::string& from,
                                const std::string& to) = 0;
};

// Deterministic in-process stand-in for a translation service.  Token-level
// dictionaries per (from, to) language pair; unmapped tokens pass through,
// which also makes an empty MockTranslator the identity translator.  Mapping
// a token to a *different* token on the way back simulates paraphrase drift.
class MockTranslator : public Translator {
public:
  void add_mapping(const std::string& from_lang, const std::string& to_lang,
                   const std::string& token_from, const std::string& token_to);
  std::string translate(const std::string& text, const std::string& from,
                        const std::string& to) override;

private:
  // (from, to) -> normalized token -> replacement
  std::map<std::pair<std::string, std::string>,
           std::unordered_map<std::string, std::string>>
      tables_;
};

// HTTP client for POST {endpoint}/v1/translate with {"q","from","to"} ->
// {"text"}.  Transient transport failures retry with jittered exponential
// backoff; a well-formed reply with the wrong shape is a ProtocolError and
// is not retried.
class HttpTranslator : public Translator {
public:
  HttpTranslator(std::string endpoint, HttpOptions options = {});
  std::string translate(const std::string& text, const std::string& from,
                        const std::string& to) override;

private:
  std::string endpoint_;
  HttpOptions options_;
  std::shared_ptr<void> limiter_;  // bounds in-flight requests
  std::atomic<std::uint64_t> jitter_counter_{0};
};

// Forwards to another translator while tallying call count and time spent
// inside it — the "provider latency" split reported by repair stats.
class CountingTranslator : public Translator {
public:
  explicit CountingTranslator(Translator& inner) : inner_(inner) {}
  std::string translate(const std::string& text, const std::string& from,
                        const std::string& to) override;
  long long calls() const { return calls_.load(); }
  double total_ms() const { return double(total_us_.load()) / 1000.0; }

private:
  Translator& inner_;
  std::atomic<long long> calls_{0};
  std::atomic<long long> total_us_{0};
};

// Per-run memo: identical (text, from, to) triples hit the backend once.
class MemoizingTranslator : public Translator {
public:
  explicit MemoizingTranslator(Translator& inner) : inner_(inner) {}
  std::string translate(const std::string& text, const std::string& from,
                        const std::string& to) override;

private:
  Translator& inner_;
  std::mutex mu_;
  std::unordered_map<std::string, std::string> memo_;
};

// One batched call to POST {endpoint}/v1/classify with {"texts": [...]} ->
// {"probs": [[...], ...]}.  Row count must match the batch; each row must
// sum to 1 within 1e-3 (then it is renormalized exactly).  label_names may
// be null when the caller doesn't know the label set.
std::vector<ProbVector> classify_remote(
    const std::string& endpoint, const std::vector<std::string>& texts,
    std::shared_ptr<const std::vector<std::string>> label_names,
    const HttpOptions& options = {});

// Classifier backed by a remote /v1/classify endpoint.
class RemoteClassifier : public Classifier {
public:
  RemoteClassifier(std::string id, std::string endpoint,
                   std::vector<std::string> label_names, HttpOptions options = {});
  ProbVector classify(const std::string& text) const override;
  std::vector<ProbVector> classify_batch(
      const std::vector<std::string>& texts) const override;
  std::shared_ptr<const std::vector<std::string>> label_names() const override;
  const std::string& id() const override;

private:
  std::string id_;
  std::string endpoint_;
  std::shared_ptr<const std::vector<std::string>> names_;
  HttpOptions options_;
};

}  // namespace textrepair
