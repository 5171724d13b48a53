#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "textrepair/classifier.hpp"
#include "textrepair/error.hpp"
#include "textrepair/rand.hpp"

namespace textrepair {

namespace {

std::vector<double> model_logits(const BuiltinModel& m,
                                 const std::vector<double>& x) {
  const std::size_t k = m.label_names.size();
  std::vector<double> logits(k);
  for (std::size_t c = 0; c < k; ++c) {
    double z = m.bias[c];
    const double* row = m.weights.data() + c * static_cast<std::size_t>(m.dim);
    for (int j = 0; j < m.dim; ++j) z += row[j] * x[static_cast<std::size_t>(j)];
    logits[c] = z;
  }
  return logits;
}

}  // namespace

double cross_entropy_loss(const BuiltinModel& m,
                          const std::vector<std::vector<double>>& feats,
                          const std::vector<int>& labels) {
  if (feats.empty() || feats.size() != labels.size()) {
    throw ConfigError("loss: features/labels size mismatch or empty");
  }
  double total = 0;
  for (std::size_t n = 0; n < feats.size(); ++n) {
    std::vector<double> p = softmax(model_logits(m, feats[n]));
    double py = std::max(p[static_cast<std::size_t>(labels[n])], 1e-300);
    total -= std::log(py);
  }
  return total / static_cast<double>(feats.size());
}

Gradients cross_entropy_gradient(const BuiltinModel& m,
                                 const std::vector<std::vector<double>>& feats,
                                 const std::vector<int>& labels) {
  if (feats.empty() || feats.size() != labels.size()) {
    throw ConfigError("gradient: features/labels size mismatch or empty");
  }
  const std::size_t k = m.label_names.size();
  Gradients g;
  g.weights.assign(m.weights.size(), 0.0);
  g.bias.assign(k, 0.0);
  for (std::size_t n = 0; n < feats.size(); ++n) {
    std::vector<double> p = softmax(model_logits(m, feats[n]));
    p[static_cast<std::size_t>(labels[n])] -= 1.0;  // p - onehot
    for (std::size_t c = 0; c < k; ++c) {
      g.bias[c] += p[c];
      double* row = g.weights.data() + c * static_cast<std::size_t>(m.dim);
      for (int j = 0; j < m.dim; ++j) {
        row[j] += p[c] * feats[n][static_cast<std::size_t>(j)];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(feats.size());
  for (double& v : g.weights) v *= inv;
  for (double& v : g.bias) v *= inv;
  return g;
}

BuiltinModel train_builtin(const std::vector<LabeledText>& data,
                           const EmbeddingStore& store, const TrainConfig& cfg) {
  if (data.empty()) throw ConfigError("training dataset is empty");
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(cfg.learning_rate > 0)) throw ConfigError("learning_rate must be > 0");

  std::vector<std::string> names = cfg.label_names;
  if (names.empty()) {
    std::set<std::string> uniq;
    for (const LabeledText& item : data) uniq.insert(item.label);
    names.assign(uniq.begin(), uniq.end());
  }
  if (names.size() < 2) throw ConfigError("training needs at least 2 distinct labels");

  std::map<std::string, int> name_to_idx;
  for (std::size_t i = 0; i < names.size(); ++i) {
    name_to_idx[names[i]] = static_cast<int>(i);
  }

  std::vector<std::vector<double>> feats;
  std::vector<int> labels;
  feats.reserve(data.size());
  labels.reserve(data.size());
  std::set<int> seen_labels;
  for (const LabeledText& item : data) {
    auto it = name_to_idx.find(item.label);
    if (it == name_to_idx.end()) {
      throw ConfigError("label \"" + item.label + "\" outside the declared label set");
    }
    feats.push_back(mean_embedding(item.text, store));
    labels.push_back(it->second);
    seen_labels.insert(it->second);
  }
  if (seen_labels.size() < 2) {
    throw ConfigError("training needs at least 2 distinct labels");
  }

  const std::size_t k = names.size();
  BuiltinModel m;
  m.dim = store.dim();
  m.label_names = names;
  m.weights.assign(k * static_cast<std::size_t>(m.dim), 0.0);
  m.bias.assign(k, 0.0);

  Rng rng(cfg.seed);
  // Small random init: keeps training convex-friendly while letting two
  // seeds produce genuinely different parameter vectors.
  for (double& w : m.weights) w = (rng.uniform_real() - 0.5) * 0.02;

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<std::vector<double>> bf;
  std::vector<int> bl;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      bf.clear();
      bl.clear();
      for (std::size_t i = start; i < stop; ++i) {
        bf.push_back(feats[order[i]]);
        bl.push_back(labels[order[i]]);
      }
      Gradients g = cross_entropy_gradient(m, bf, bl);
      for (std::size_t i = 0; i < m.weights.size(); ++i) {
        m.weights[i] -= cfg.learning_rate * g.weights[i];
      }
      for (std::size_t i = 0; i < m.bias.size(); ++i) {
        m.bias[i] -= cfg.learning_rate * g.bias[i];
      }
    }
  }
  m.validate();
  return m;
}

}  // namespace textrepair
