#pragma once

#include <string>
#include <vector>

#include "textrepair/detector.hpp"
#include "textrepair/perturb.hpp"
#include "textrepair/voting.hpp"

namespace textrepair {

struct RepairConfig {
  DetectorConfig detector;
  PerturbConfig perturb;
  SprtParams sprt{0.1, 0.1, 0.8, 0.16};

  void validate() const;  // throws ConfigError
};

struct RepairStats {
  long long candidates_generated = 0;  // delivered by the stream
  long long candidates_filtered = 0;   // survived the adversarial check
  int labels_rejected = 0;             // hypotheses the test dismissed
  double detect_ms = 0.0;    // the initial adversarial check on the input
  double wall_time_ms = 0.0; // whole call, detection included
  long long translation_calls = 0;
  double translation_ms = 0.0;  // time spent inside the translator
};

enum class RepairDecision { NotAdversarial, Accepted, BudgetExhausted };

// One filtered candidate: both models agreed on `label` and diverged by
// d_kl < epsilon.
struct RepairCandidate {
  std::string text;
  int label = -1;
  double d_kl = 0.0;
};

struct RepairOutcome {
  RepairDecision decision = RepairDecision::NotAdversarial;
  std::string text;          // the repaired text when Accepted, else the input
  int label = -1;            // the accepted label, or -1
  DetectionVerdict verdict;  // the detector's view of the original input
  RepairStats stats;
  std::vector<RepairCandidate> kept;  // the filtered set, generation order
};

// A remote backend died mid-repair; carries what was measured before the
// abort so batch reports can still account for the work done.
class RepairAborted : public TransportError {
public:
  RepairAborted(const std::string& what, RepairStats stats)
      : TransportError(what), stats_(stats) {}
  ~RepairAborted() override;
  const RepairStats& stats() const { return stats_; }

private:
  RepairStats stats_;
};

// Detect-and-repair for one input.
//
// Not flagged: returns immediately.  Flagged: when both models agree on the
// input's label, that label is disqualified up front (it is exactly what an
// adversarial input fools both models into).  Candidates stream in; each one
// passing the divergence check joins the kept set and its label's tally.
// Labels are tested sequentially: a rejected label is disqualified, an
// accepted label ends the run, returning the earliest kept candidate with
// that label (the least-perturbed one under the substitution engines'
// generation order).  Stream exhaustion returns the input unchanged.
RepairOutcome repair(const std::string& x, const RepairConfig& config,
                     const PerturbContext& ctx);

// Measurement harness: stream up to n filtered candidates for a flagged
// input and report the fraction bearing the expected label.
struct VoteRateResult {
  double rate = 0.0;
  long long matching = 0;
  long long sampled = 0;        // filtered candidates actually obtained
  bool exhausted_early = false; // stream ended before n
};

VoteRateResult voting_hypothesis_rate(const std::string& x_adv,
                                      const std::string& truth_label,
                                      const RepairConfig& config,
                                      const PerturbContext& ctx, long long n);

}  // namespace textrepair
