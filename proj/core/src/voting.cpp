#include "textrepair/voting.hpp"

#include <cmath>

#include "textrepair/error.hpp"

namespace textrepair {

SprtParams::SprtParams(double alpha, double beta, double rho, double sigma)
    : alpha_(alpha), beta_(beta), rho_(rho), sigma_(sigma) {
  if (!(alpha > 0 && alpha < 0.5)) throw ConfigError("alpha must be in (0, 0.5)");
  if (!(beta > 0 && beta < 0.5)) throw ConfigError("beta must be in (0, 0.5)");
  if (!(rho > 0.5)) throw ConfigError("rho must exceed 0.5");
  // 0 < sigma < min(rho, 1-rho), i.e. 0 < p1 < p0 < 1.
  if (!(sigma > 0 && rho - sigma > 0 && rho + sigma < 1.0)) {
    throw ConfigError("sigma must satisfy 0 < sigma < min(rho, 1-rho)");
  }
  accept_ = std::log(beta_ / (1.0 - alpha_));
  reject_ = std::log((1.0 - beta_) / alpha_);
  log_hit_ = std::log(p1() / p0());
  log_miss_ = std::log((1.0 - p1()) / (1.0 - p0()));
}

void SprtState::observe(int label) {
  if (label < 0) throw ConfigError("negative label index");
  if (static_cast<std::size_t>(label) >= label_counts.size()) {
    label_counts.resize(static_cast<std::size_t>(label) + 1, 0);
  }
  ++label_counts[static_cast<std::size_t>(label)];
  ++total;
}

long long SprtState::count(int label) const {
  if (label < 0 || static_cast<std::size_t>(label) >= label_counts.size()) {
    return 0;
  }
  return label_counts[static_cast<std::size_t>(label)];
}

double sprt_log_ratio(long long z, long long k, const SprtParams& params) {
  if (z < 0 || k < 0 || z > k) throw ConfigError("need 0 <= z <= k");
  return static_cast<double>(z) * params.log_hit_ratio() +
         static_cast<double>(k - z) * params.log_miss_ratio();
}

std::pair<double, double> decision_bounds(const SprtParams& params) {
  return {params.accept_bound(), params.reject_bound()};
}

SprtOutcome hyp_test(int label, const SprtState& state, const SprtParams& params) {
  const double ratio = sprt_log_ratio(state.count(label), state.total, params);
  if (ratio <= params.accept_bound()) return SprtOutcome::AcceptH0;
  if (ratio >= params.reject_bound()) return SprtOutcome::RejectH0;
  return SprtOutcome::Inconclusive;
}

double fsst_estimate(const std::vector<int>& labels, int c) {
  if (labels.empty()) throw ConfigError("fsst_estimate: empty observation list");
  std::size_t hits = 0;
  for (int l : labels) {
    if (l == c) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace textrepair
