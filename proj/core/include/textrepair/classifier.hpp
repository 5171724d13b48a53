#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "textrepair/embedding.hpp"

namespace textrepair {

// Output distribution of a classifier over K >= 2 labels.  Entries lie in
// [0,1] and sum to 1 within 1e-6.  label_names is shared per task; bare
// vectors used in math-only contexts may leave it null.
struct ProbVector {
  std::vector<double> probs;
  std::shared_ptr<const std::vector<std::string>> label_names;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }
};

// Throws ConfigError when the invariants above are violated.
void validate_prob_vector(const ProbVector& p);

// Argmax label index; ties go to the lowest index.
int label_of(const ProbVector& p);

std::vector<double> softmax(std::span<const double> logits);

// Clamp entries to [1e-12, 1] and renormalize to sum 1 — the guard that
// keeps downstream log() calls finite.
void clamp_and_renormalize(std::vector<double>& probs);

// Anything that maps text to a distribution over a fixed label set.
// Implementations are immutable after construction; classify is reentrant.
class Classifier {
public:
  virtual ~Classifier();
  virtual ProbVector classify(const std::string& text) const = 0;
  // Default implementation loops; remote backends batch over the wire.
  virtual std::vector<ProbVector> classify_batch(
      const std::vector<std::string>& texts) const;
  virtual std::shared_ptr<const std::vector<std::string>> label_names() const = 0;
  virtual const std::string& id() const = 0;
};

// Mean-embedding multinomial logistic regression.  Deliberately simple:
// the detection/repair algorithms only ever see probability vectors, and a
// convex model trains reproducibly at test scale.  Big models plug in over
// HTTP instead (see services).
struct BuiltinModel {
  int dim = 0;
  std::vector<std::string> label_names;
  std::vector<double> weights;  // K x dim, row-major
  std::vector<double> bias;     // K
  std::string embedding_ref;    // which embedding file this was trained with

  void validate() const;  // throws ConfigError
  std::string to_json() const;
  static BuiltinModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static BuiltinModel load(const std::string& path);
};

// Mean of the in-vocabulary token embeddings; zero vector when every token
// is out of vocabulary (or there are no tokens).
std::vector<double> mean_embedding(std::string_view text, const EmbeddingStore& store);

class BuiltinClassifier : public Classifier {
public:
  BuiltinClassifier(std::string id, BuiltinModel model,
                    std::shared_ptr<const EmbeddingStore> store);
  ProbVector classify(const std::string& text) const override;
  std::shared_ptr<const std::vector<std::string>> label_names() const override;
  const std::string& id() const override;
  const BuiltinModel& model() const { return model_; }

private:
  std::string id_;
  BuiltinModel model_;
  std::shared_ptr<const EmbeddingStore> store_;
  std::shared_ptr<const std::vector<std::string>> names_;
};

struct LabeledText {
  std::string text;
  std::string label;
};

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 0.5;
  int batch_size = 16;
  std::uint64_t seed = 0;
  // Empty: derive the label set from the data (sorted unique).  When given,
  // a data label outside this set is a ConfigError.
  std::vector<std::string> label_names;
};

// Mini-batch gradient descent on the cross-entropy loss.  Bit-deterministic
// for a fixed seed (init and batch order both derive from it).
BuiltinModel train_builtin(const std::vector<LabeledText>& data,
                           const EmbeddingStore& store, const TrainConfig& cfg);

// Loss/gradient over explicit features, exposed so tests can check the
// analytic gradient against finite differences.
double cross_entropy_loss(const BuiltinModel& m,
                          const std::vector<std::vector<double>>& feats,
                          const std::vector<int>& labels);
struct Gradients {
  std::vector<double> weights;  // same layout as BuiltinModel::weights
  std::vector<double> bias;
};
Gradients cross_entropy_gradient(const BuiltinModel& m,
                                 const std::vector<std::vector<double>>& feats,
                                 const std::vector<int>& labels);

// Fraction of items whose argmax label matches the annotation.  Labels not
// in the classifier's label set never match.
double label_accuracy(const Classifier& c, const std::vector<LabeledText>& data);

}  // namespace textrepair
