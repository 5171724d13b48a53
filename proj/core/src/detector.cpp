#include "textrepair/detector.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "textrepair/error.hpp"

namespace textrepair {

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("kl_divergence: dimension mismatch");
  }
  double sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = std::clamp(p[i], 1e-12, 1.0);
    const double qi = std::clamp(q[i], 1e-12, 1.0);
    if (p[i] == 0.0) continue;  // 0 * ln(0/q) == 0 by convention
    sum += pi * std::log(pi / qi);
  }
  return sum;
}

double kl_divergence(const ProbVector& p, const ProbVector& q) {
  return kl_divergence(std::span<const double>(p.probs),
                       std::span<const double>(q.probs));
}

void DetectorConfig::validate() const {
  if (epsilon < 0) throw ConfigError("epsilon must be >= 0");
  if (models.size() < 2) throw ConfigError("detector needs at least 2 models");
  for (const auto& m : models) {
    if (!m) throw ConfigError("detector model is null");
  }
  const auto first = models[0]->label_names();
  for (std::size_t i = 1; i < models.size(); ++i) {
    const auto other = models[i]->label_names();
    if (*first != *other) {
      throw ConfigError("models \"" + models[0]->id() + "\" and \"" +
                        models[i]->id() + "\" disagree on the label set");
    }
  }
}

namespace {

DetectionVerdict verdict_from_probs(const std::vector<ProbVector>& probs,
                                    double epsilon) {
  DetectionVerdict v;
  v.labels.reserve(probs.size());
  for (const ProbVector& p : probs) v.labels.push_back(label_of(p));

  bool labels_agree = true;
  for (std::size_t i = 1; i < v.labels.size(); ++i) {
    if (v.labels[i] != v.labels[0]) { labels_agree = false; break; }
  }
  double max_kl = 0;
  bool any_over = false;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    for (std::size_t j = i + 1; j < probs.size(); ++j) {
      const double d = kl_divergence(probs[i], probs[j]);
      max_kl = std::max(max_kl, d);
      if (d >= epsilon) any_over = true;
    }
  }
  v.d_kl = max_kl;
  v.adversarial = !labels_agree || any_over;
  return v;
}

}  // namespace

DetectionVerdict is_adversarial(const std::string& x, const DetectorConfig& config) {
  config.validate();
  if (config.models.size() != 2) {
    throw ConfigError("is_adversarial expects exactly 2 models");
  }
  std::vector<ProbVector> probs;
  probs.reserve(2);
  for (const auto& m : config.models) probs.push_back(m->classify(x));
  return verdict_from_probs(probs, config.epsilon);
}

DetectionVerdict is_adversarial_multi(const std::string& x,
                                      const DetectorConfig& config) {
  config.validate();
  if (config.models.size() != 3) {
    throw ConfigError("is_adversarial_multi expects exactly 3 models");
  }
  std::vector<ProbVector> probs;
  probs.reserve(3);
  for (const auto& m : config.models) probs.push_back(m->classify(x));
  return verdict_from_probs(probs, config.epsilon);
}

DetectionMetrics detection_metrics(
    const std::vector<std::pair<DetectionVerdict, bool>>& verdicts) {
  if (verdicts.empty()) throw ConfigError("detection_metrics: empty input");
  DetectionMetrics m;
  for (const auto& [v, truth] : verdicts) {
    if (truth) {
      (v.adversarial ? m.tp : m.fn)++;
    } else {
      (v.adversarial ? m.fp : m.tn)++;
    }
  }
  if (m.tp + m.fn > 0) {
    m.detection_rate = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  } else {
    m.detection_rate_undefined = true;
  }
  if (m.tp + m.fp > 0) {
    m.false_positive_rate =
        static_cast<double>(m.fp) / static_cast<double>(m.tp + m.fp);
  } else {
    m.false_positive_undefined = true;
  }
  return m;
}

GoldenResult golden_section_maximize(const std::function<double(double)>& objective,
                                     double lo, double hi, double tol,
                                     int max_iters) {
  if (!(lo < hi)) throw ConfigError("golden section: need lo < hi");
  if (!(tol > 0)) throw ConfigError("golden section: tol must be > 0");

  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;  // 0.618...
  double a = lo, b = hi;
  double c = b - (b - a) * inv_phi;
  double d = a + (b - a) * inv_phi;
  double fc = objective(c);
  double fd = objective(d);
  int iters = 0;
  while ((b - a) >= tol && iters < max_iters) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (b - a) * inv_phi;
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (b - a) * inv_phi;
      fd = objective(d);
    }
    ++iters;
  }
  GoldenResult r;
  r.x = (a + b) / 2.0;
  r.value = objective(r.x);
  r.iterations = iters;
  return r;
}

double threshold_accuracy(const std::vector<ScoredSample>& scored, double epsilon) {
  if (scored.empty()) throw ConfigError("threshold_accuracy: empty input");
  std::size_t hits = 0;
  for (const ScoredSample& s : scored) {
    if ((s.d_kl >= epsilon) == s.adversarial) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(scored.size());
}

CalibrationResult calibrate_epsilon(const std::vector<ScoredSample>& scored,
                                    double lo, double hi, double tol) {
  if (scored.empty()) throw ConfigError("calibration set is empty");
  bool any_adv = false, any_norm = false;
  for (const ScoredSample& s : scored) (s.adversarial ? any_adv : any_norm) = true;
  if (!any_adv || !any_norm) {
    throw ConfigError("calibration set must contain both classes");
  }

  auto objective = [&scored](double eps) { return threshold_accuracy(scored, eps); };
  GoldenResult g = golden_section_maximize(objective, lo, hi, tol);

  // The objective is a step function, so whole plateaus tie.  Sweep the
  // midpoints between adjacent observed scores (every interior plateau has
  // one) plus the range ends (the flag-everything / flag-nothing plateaus),
  // preferring the smallest tied threshold.
  std::set<double> distinct;
  for (const ScoredSample& s : scored) distinct.insert(s.d_kl);
  std::vector<double> candidates{g.x, lo, hi};
  double prev = 0;
  bool have_prev = false;
  for (double v : distinct) {
    if (have_prev) {
      const double mid = (prev + v) / 2.0;
      if (mid >= lo && mid <= hi) candidates.push_back(mid);
    }
    prev = v;
    have_prev = true;
  }

  CalibrationResult best;
  best.epsilon = g.x;
  best.accuracy = g.value;
  best.iterations = g.iterations;
  for (double eps : candidates) {
    const double acc = threshold_accuracy(scored, eps);
    if (acc > best.accuracy || (acc == best.accuracy && eps < best.epsilon)) {
      best.accuracy = acc;
      best.epsilon = eps;
    }
  }
  return best;
}

}  // namespace textrepair
