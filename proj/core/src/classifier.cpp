#include "textrepair/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "textrepair/error.hpp"
#include "textrepair/text.hpp"

namespace textrepair {

using nlohmann::json;

void validate_prob_vector(const ProbVector& p) {
  if (p.probs.size() < 2) throw ConfigError("probability vector needs K >= 2");
  double sum = 0;
  for (double v : p.probs) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ConfigError("probability entry outside [0, 1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ConfigError("probabilities sum to " + std::to_string(sum) + ", not 1");
  }
}

int label_of(const ProbVector& p) {
  if (p.probs.empty()) throw ConfigError("label_of: empty probability vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.probs.size(); ++i) {
    if (p.probs[i] > p.probs[best]) best = i;
  }
  return static_cast<int>(best);
}

std::vector<double> softmax(std::span<const double> logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> out(logits.size());
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

void clamp_and_renormalize(std::vector<double>& probs) {
  double sum = 0;
  for (double& v : probs) {
    v = std::clamp(v, 1e-12, 1.0);
    sum += v;
  }
  for (double& v : probs) v /= sum;
}

Classifier::~Classifier() = default;

std::vector<ProbVector> Classifier::classify_batch(
    const std::vector<std::string>& texts) const {
  std::vector<ProbVector> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) out.push_back(classify(t));
  return out;
}

void BuiltinModel::validate() const {
  const std::size_t k = label_names.size();
  if (dim <= 0) throw ConfigError("model dim must be positive");
  if (k < 2) throw ConfigError("model needs at least 2 labels");
  if (weights.size() != k * static_cast<std::size_t>(dim)) {
    throw ConfigError("model weights size != K x dim");
  }
  if (bias.size() != k) throw ConfigError("model bias size != K");
  for (double w : weights) {
    if (!std::isfinite(w)) throw ConfigError("model weight not finite");
  }
  for (double b : bias) {
    if (!std::isfinite(b)) throw ConfigError("model bias not finite");
  }
}

std::string BuiltinModel::to_json() const {
  json j;
  j["dim"] = dim;
  j["label_names"] = label_names;
  j["weights"] = weights;
  j["bias"] = bias;
  j["embedding_ref"] = embedding_ref;
  return j.dump();
}

BuiltinModel BuiltinModel::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("model JSON parse failure: ") + e.what());
  }
  BuiltinModel m;
  try {
    m.dim = j.at("dim").get<int>();
    m.label_names = j.at("label_names").get<std::vector<std::string>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<std::vector<double>>();
    m.embedding_ref = j.at("embedding_ref").get<std::string>();
  } catch (const json::exception& e) {
    throw IoError(std::string("model JSON missing/typed field: ") + e.what());
  }
  m.validate();
  return m;
}

void BuiltinModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file: " + path);
  out << to_json() << '\n';
  if (!out) throw IoError("write failure on model file: " + path);
}

BuiltinModel BuiltinModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::vector<double> mean_embedding(std::string_view text,
                                   const EmbeddingStore& store) {
  std::vector<double> mean(static_cast<std::size_t>(store.dim()), 0.0);
  std::size_t n = 0;
  for (const Token& tok : tokenize(text)) {
    const std::vector<float>* vec = store.find(tok.normalized);
    if (vec == nullptr) continue;
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (*vec)[i];
    ++n;
  }
  if (n > 0) {
    for (double& v : mean) v /= static_cast<double>(n);
  }
  return mean;
}

BuiltinClassifier::BuiltinClassifier(std::string id, BuiltinModel model,
                                     std::shared_ptr<const EmbeddingStore> store)
    : id_(std::move(id)), model_(std::move(model)), store_(std::move(store)) {
  model_.validate();
  if (!store_) throw ConfigError("builtin classifier needs an embedding store");
  if (store_->dim() != model_.dim) {
    throw ConfigError("embedding dim " + std::to_string(store_->dim()) +
                      " != model dim " + std::to_string(model_.dim));
  }
  names_ = std::make_shared<const std::vector<std::string>>(model_.label_names);
}

ProbVector BuiltinClassifier::classify(const std::string& text) const {
  const std::vector<double> x = mean_embedding(text, *store_);
  const std::size_t k = model_.label_names.size();
  std::vector<double> logits(k);
  for (std::size_t c = 0; c < k; ++c) {
    double z = model_.bias[c];
    const double* row = model_.weights.data() + c * static_cast<std::size_t>(model_.dim);
    for (int j = 0; j < model_.dim; ++j) z += row[j] * x[static_cast<std::size_t>(j)];
    logits[c] = z;
  }
  ProbVector out;
  out.probs = softmax(logits);
  clamp_and_renormalize(out.probs);
  out.label_names = names_;
  return out;
}

std::shared_ptr<const std::vector<std::string>> BuiltinClassifier::label_names() const {
  return names_;
}

const std::string& BuiltinClassifier::id() const { return id_; }

double label_accuracy(const Classifier& c, const std::vector<LabeledText>& data) {
  if (data.empty()) throw ConfigError("accuracy over an empty dataset");
  const auto names = c.label_names();
  std::size_t hits = 0;
  for (const LabeledText& item : data) {
    const int got = label_of(c.classify(item.text));
    if (static_cast<std::size_t>(got) < names->size() &&
        (*names)[static_cast<std::size_t>(got)] == item.label) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace textrepair
