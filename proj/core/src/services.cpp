#include "textrepair/services.hpp"

#include <algorithm>
#include <cmath>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "textrepair/error.hpp"
#include "textrepair/rand.hpp"
#include "textrepair/text.hpp"

namespace textrepair {

using nlohmann::json;

void HttpOptions::validate() const {
  if (retries < 0) throw ConfigError("retries must be >= 0");
  if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
}

Translator::~Translator() = default;

namespace {

void check_translate_args(const std::string& text, const std::string& from,
                          const std::string& to) {
  if (text.empty()) throw ConfigError("translate: empty text");
  if (from == to) throw ConfigError("translate: from == to (" + from + ")");
  if (from.empty() || to.empty()) throw ConfigError("translate: empty language code");
}

// In-flight limiter shared by the HTTP clients.  A plain counting semaphore
// sized at construction.
class Limiter {
public:
  explicit Limiter(int n) : sem_(n) {}
  class Guard {
  public:
    explicit Guard(Limiter& l) : l_(l) { l_.sem_.acquire(); }
    ~Guard() { l_.sem_.release(); }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

  private:
    Limiter& l_;
  };

private:
  std::counting_semaphore<> sem_;
};

struct HttpReply {
  int status = 0;
  std::string body;
};

// POST JSON with retries on transport-level failure (no response at all or
// a 5xx).  4xx and malformed payloads are for the caller to judge.
HttpReply post_json(const std::string& endpoint, const std::string& path,
                    const std::string& body, const HttpOptions& opts,
                    std::atomic<std::uint64_t>& jitter_counter,
                    const std::string& what) {
  std::string last_error;
  for (int attempt = 0; attempt <= opts.retries; ++attempt) {
    if (attempt > 0) {
      // Exponential backoff with deterministic jitter in [0.5, 1.0).
      Rng rng(mix_seed(opts.jitter_seed, jitter_counter.fetch_add(1)));
      double scale = 0.5 + rng.uniform_real() * 0.5;
      auto base = opts.backoff_base * (1LL << std::min(attempt - 1, 10));
      auto delay = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::min<std::chrono::milliseconds>(base, opts.backoff_cap) * scale);
      std::this_thread::sleep_for(delay);
    }
    httplib::Client client(endpoint);
    client.set_connection_timeout(opts.timeout);
    client.set_read_timeout(opts.timeout);
    client.set_write_timeout(opts.timeout);
    httplib::Result res = client.Post(path, body, "application/json");
    if (!res) {
      last_error = "transport failure (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error " + std::to_string(res->status);
      continue;
    }
    return {res->status, res->body};
  }
  throw TransportError(what + ": " + last_error + " after " +
                       std::to_string(opts.retries + 1) + " attempts to " +
                       endpoint);
}

}  // namespace

void MockTranslator::add_mapping(const std::string& from_lang,
                                 const std::string& to_lang,
                                 const std::string& token_from,
                                 const std::string& token_to) {
  tables_[{from_lang, to_lang}][normalize_token(token_from)] = token_to;
}

std::string MockTranslator::translate(const std::string& text,
                                      const std::string& from,
                                      const std::string& to) {
  check_translate_args(text, from, to);
  auto table_it = tables_.find({from, to});
  if (table_it == tables_.end()) return text;  // no dictionary: pass through

  const Document doc = split_sentences(text);
  std::vector<std::string> out = surfaces(doc);
  for (std::string& s : out) {
    auto it = table_it->second.find(normalize_token(s));
    if (it != table_it->second.end()) s = it->second;
  }
  return detokenize(doc, out);
}

HttpTranslator::HttpTranslator(std::string endpoint, HttpOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {
  options_.validate();
  limiter_ = std::make_shared<Limiter>(options_.max_in_flight);
}

std::string HttpTranslator::translate(const std::string& text,
                                      const std::string& from,
                                      const std::string& to) {
  check_translate_args(text, from, to);
  json body{{"q", text}, {"from", from}, {"to", to}};
  Limiter::Guard guard(*static_cast<Limiter*>(limiter_.get()));
  HttpReply reply = post_json(endpoint_, "/v1/translate", body.dump(), options_,
                              jitter_counter_, "translate");
  if (reply.status != 200) {
    throw ProtocolError("translate: unexpected status " +
                        std::to_string(reply.status));
  }
  json parsed;
  try {
    parsed = json::parse(reply.body);
  } catch (const json::exception&) {
    throw ProtocolError("translate: response is not JSON");
  }
  if (!parsed.is_object() || !parsed.contains("text") ||
      !parsed["text"].is_string()) {
    throw ProtocolError("translate: response lacks a \"text\" string");
  }
  std::string out = parsed["text"].get<std::string>();
  if (out.empty()) throw ProtocolError("translate: empty translation result");
  return out;
}

std::string CountingTranslator::translate(const std::string& text,
                                          const std::string& from,
                                          const std::string& to) {
  auto start = std::chrono::steady_clock::now();
  std::string out = inner_.translate(text, from, to);
  auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
  calls_.fetch_add(1);
  total_us_.fetch_add(us);
  return out;
}

std::string MemoizingTranslator::translate(const std::string& text,
                                           const std::string& from,
                                           const std::string& to) {
  std::string key = from + '\x1f' + to + '\x1f' + text;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  std::string out = inner_.translate(text, from, to);
  std::lock_guard<std::mutex> lock(mu_);
  memo_.emplace(std::move(key), out);
  return out;
}

std::vector<ProbVector> classify_remote(
    const std::string& endpoint, const std::vector<std::string>& texts,
    std::shared_ptr<const std::vector<std::string>> label_names,
    const HttpOptions& options) {
  if (texts.empty()) throw ConfigError("classify_remote: empty batch");
  options.validate();
  json body{{"texts", texts}};
  std::atomic<std::uint64_t> jitter{0};
  HttpReply reply =
      post_json(endpoint, "/v1/classify", body.dump(), options, jitter, "classify");
  if (reply.status != 200) {
    throw ProtocolError("classify: unexpected status " +
                        std::to_string(reply.status) + " from " + endpoint);
  }
  json parsed;
  try {
    parsed = json::parse(reply.body);
  } catch (const json::exception&) {
    throw ProtocolError("classify: response is not JSON");
  }
  if (!parsed.is_object() || !parsed.contains("probs") ||
      !parsed["probs"].is_array()) {
    throw ProtocolError("classify: response lacks a \"probs\" array");
  }
  const json& rows = parsed["probs"];
  if (rows.size() != texts.size()) {
    throw ProtocolError("classify: got " + std::to_string(rows.size()) +
                        " rows for a batch of " + std::to_string(texts.size()));
  }
  std::vector<ProbVector> out;
  out.reserve(rows.size());
  std::size_t expect_k =
      label_names ? label_names->size() : 0;
  for (const json& row : rows) {
    if (!row.is_array() || row.size() < 2) {
      throw ProtocolError("classify: probability row is not an array of K >= 2");
    }
    if (expect_k == 0) expect_k = row.size();
    if (row.size() != expect_k) {
      throw ProtocolError("classify: inconsistent row width");
    }
    ProbVector p;
    p.probs.reserve(row.size());
    double sum = 0;
    for (const json& v : row) {
      if (!v.is_number()) throw ProtocolError("classify: non-numeric probability");
      double x = v.get<double>();
      if (!(x >= 0.0 && x <= 1.0 + 1e-9)) {
        throw ProtocolError("classify: probability outside [0, 1]");
      }
      p.probs.push_back(x);
      sum += x;
    }
    if (sum < 1.0 - 1e-3 || sum > 1.0 + 1e-3) {
      throw ProtocolError("classify: probabilities sum to " + std::to_string(sum));
    }
    clamp_and_renormalize(p.probs);
    p.label_names = label_names;
    out.push_back(std::move(p));
  }
  return out;
}

RemoteClassifier::RemoteClassifier(std::string id, std::string endpoint,
                                   std::vector<std::string> label_names,
                                   HttpOptions options)
    : id_(std::move(id)), endpoint_(std::move(endpoint)), options_(options) {
  options_.validate();
  if (label_names.size() < 2) {
    throw ConfigError("remote classifier \"" + id_ + "\" needs >= 2 label names");
  }
  names_ = std::make_shared<const std::vector<std::string>>(std::move(label_names));
}

ProbVector RemoteClassifier::classify(const std::string& text) const {
  return classify_batch({text}).front();
}

std::vector<ProbVector> RemoteClassifier::classify_batch(
    const std::vector<std::string>& texts) const {
  try {
    return classify_remote(endpoint_, texts, names_, options_);
  } catch (const ProtocolError& e) {
    throw ProtocolError("backend \"" + id_ + "\": " + e.what());
  } catch (const TransportError& e) {
    throw TransportError("backend \"" + id_ + "\": " + e.what());
  }
}

std::shared_ptr<const std::vector<std::string>> RemoteClassifier::label_names() const {
  return names_;
}

const std::string& RemoteClassifier::id() const { return id_; }

}  // namespace textrepair
