#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "textrepair/classifier.hpp"

namespace textrepair {

// Σ_i p_i ln(p_i / q_i), with 0·ln(0/q) = 0.  Inputs are clamped to
// [1e-12, 1] here as well, so a raw softmax straight off the wire cannot
// produce log(0).  Non-negative up to ~1e-9 rounding for distributions.
double kl_divergence(std::span<const double> p, std::span<const double> q);
double kl_divergence(const ProbVector& p, const ProbVector& q);

struct DetectorConfig {
  double epsilon = 0.0;
  std::vector<std::shared_ptr<const Classifier>> models;

  // epsilon >= 0, >= 2 models, label sets identical and identically
  // ordered.  Throws ConfigError.
  void validate() const;
};

struct DetectionVerdict {
  bool adversarial = false;
  double d_kl = 0.0;        // max pairwise divergence when > 2 models
  std::vector<int> labels;  // per-model argmax
};

// Two-model check: the input is clean only when both labels agree AND
// d_kl < epsilon; everything else is flagged.
DetectionVerdict is_adversarial(const std::string& x, const DetectorConfig& config);

// Three-model variant: flagged when any pairwise divergence reaches
// epsilon or any two labels disagree.  d_kl reports the max pairwise value.
DetectionVerdict is_adversarial_multi(const std::string& x,
                                      const DetectorConfig& config);

struct DetectionMetrics {
  double detection_rate = 0.0;       // tp / (tp + fn), over true adversarials
  double false_positive_rate = 0.0;  // fp / (tp + fp), over flagged items
  long long tp = 0, tn = 0, fp = 0, fn = 0;
  bool detection_rate_undefined = false;   // no true adversarials in the set
  bool false_positive_undefined = false;   // nothing was flagged
};

DetectionMetrics detection_metrics(
    const std::vector<std::pair<DetectionVerdict, bool>>& verdicts);

struct GoldenResult {
  double x = 0.0;      // argmax position
  double value = 0.0;  // objective there
  int iterations = 0;
};

// Derivative-free maximization by golden-ratio interval shrinking; stops
// when the interval is below tol or after max_iters shrink steps, returning
// the final interval's midpoint.
GoldenResult golden_section_maximize(const std::function<double(double)>& objective,
                                     double lo, double hi, double tol,
                                     int max_iters = 100);

struct ScoredSample {
  double d_kl = 0.0;
  bool adversarial = false;
};

struct CalibrationResult {
  double epsilon = 0.0;
  double accuracy = 0.0;
  int iterations = 0;
};

// Accuracy of the rule (d_kl >= epsilon → adversarial) over the samples.
double threshold_accuracy(const std::vector<ScoredSample>& scored, double epsilon);

// Pick the divergence threshold: golden-section over [lo, hi] on the
// step-function accuracy, then a sweep over the midpoints between adjacent
// observed scores to resolve plateau ties toward the smaller epsilon.
CalibrationResult calibrate_epsilon(const std::vector<ScoredSample>& scored,
                                    double lo = 0.0, double hi = 10.0,
                                    double tol = 1e-3);

}  // namespace textrepair
