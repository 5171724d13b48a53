#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace textrepair {

// Sequential probability ratio test over "does this label hold with
// probability at least rho".  The two simple hypotheses sit on either side
// of the indifference region: p0 = rho + sigma versus p1 = rho - sigma.
class SprtParams {
public:
  // Validates: 0 < alpha, beta < 0.5; rho > 0.5; 0 < sigma < min(rho, 1-rho).
  // Throws ConfigError otherwise.
  SprtParams(double alpha, double beta, double rho, double sigma);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double rho() const { return rho_; }
  double sigma() const { return sigma_; }
  double p0() const { return rho_ + sigma_; }
  double p1() const { return rho_ - sigma_; }

  // Log-space decision bounds: accept H0 at or below A = ln(beta/(1-alpha)),
  // reject at or above B = ln((1-beta)/alpha).  A < 0 < B always.
  double accept_bound() const { return accept_; }
  double reject_bound() const { return reject_; }

  // Per-observation log-likelihood increments (hit = the label matched).
  double log_hit_ratio() const { return log_hit_; }    // ln(p1/p0) < 0
  double log_miss_ratio() const { return log_miss_; }  // ln((1-p1)/(1-p0)) > 0

private:
  double alpha_, beta_, rho_, sigma_;
  double accept_, reject_, log_hit_, log_miss_;
};

// Running tally of filtered candidates: k in total, z per label.
struct SprtState {
  long long total = 0;                   // k
  std::vector<long long> label_counts;   // z, indexed by label

  void observe(int label);
  long long count(int label) const;
};

enum class SprtOutcome { AcceptH0, RejectH0, Inconclusive };

// z hits out of k observations: z*ln(p1/p0) + (k-z)*ln((1-p1)/(1-p0)).
double sprt_log_ratio(long long z, long long k, const SprtParams& params);

// (A, B) as defined on SprtParams; kept as a free function for callers
// that only want the numbers.
std::pair<double, double> decision_bounds(const SprtParams& params);

// Test H0("label holds with prob >= p0") against the current state.
SprtOutcome hyp_test(int label, const SprtState& state, const SprtParams& params);

// Fixed-size sampling estimate: fraction of the observed labels equal to c.
// Throws ConfigError on an empty list.
double fsst_estimate(const std::vector<int>& labels, int c);

}  // namespace textrepair
