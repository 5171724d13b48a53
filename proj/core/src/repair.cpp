#include "textrepair/repair.hpp"

#include <algorithm>
#include <chrono>

#include "textrepair/error.hpp"

namespace textrepair {

RepairAborted::~RepairAborted() = default;

void RepairConfig::validate() const {
  detector.validate();
  if (detector.models.size() != 2) {
    throw ConfigError("repair works over exactly 2 models");
  }
  perturb.validate();
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

bool contains(const std::vector<int>& v, int x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

RepairOutcome repair(const std::string& x, const RepairConfig& config,
                     const PerturbContext& ctx) {
  config.validate();
  const auto start = Clock::now();

  RepairOutcome out;
  out.text = x;
  out.verdict = is_adversarial(x, config.detector);
  out.stats.detect_ms = ms_since(start);
  if (!out.verdict.adversarial) {
    out.decision = RepairDecision::NotAdversarial;
    out.stats.wall_time_ms = ms_since(start);
    return out;
  }

  // Wrap the translator so provider time and call counts land in stats,
  // whichever engine runs.
  PerturbContext local_ctx = ctx;
  std::unique_ptr<CountingTranslator> counting;
  if (ctx.translator != nullptr) {
    counting = std::make_unique<CountingTranslator>(*ctx.translator);
    local_ctx.translator = counting.get();
  }
  auto finalize_stats = [&](RepairStats& s, const PerturbationStream& stream) {
    s.candidates_generated = stream.emitted();
    if (counting) {
      s.translation_calls = counting->calls();
      s.translation_ms = counting->total_ms();
    }
    s.wall_time_ms = ms_since(start);
  };

  std::vector<int> disqualified;  // D: labels that can no longer win
  if (out.verdict.labels[0] == out.verdict.labels[1]) {
    // Both models agree on the flagged input; that consensus label is what
    // the adversarial perturbation produced, so it cannot be the repair.
    disqualified.push_back(out.verdict.labels[0]);
  }
  std::vector<int> witnessed;  // C: labels seen among kept candidates, in order
  SprtState state;

  PerturbationStream stream = open_stream(split_sentences(x), config.perturb,
                                          local_ctx);
  try {
    while (std::optional<std::string> candidate = stream.next()) {
      DetectionVerdict v = is_adversarial(*candidate, config.detector);
      if (v.adversarial) continue;  // still suspicious; not a usable variant

      const int label = v.labels[0];
      // The check guarantees agreement between the models here.
      out.kept.push_back({*candidate, label, v.d_kl});
      ++out.stats.candidates_filtered;
      state.observe(label);
      if (!contains(witnessed, label) && !contains(disqualified, label)) {
        witnessed.push_back(label);
      }

      for (int c : witnessed) {
        if (contains(disqualified, c)) continue;
        switch (hyp_test(c, state, config.sprt)) {
          case SprtOutcome::AcceptH0: {
            auto it = std::find_if(out.kept.begin(), out.kept.end(),
                                   [c](const RepairCandidate& k) {
                                     return k.label == c;
                                   });
            out.decision = RepairDecision::Accepted;
            out.text = it->text;
            out.label = c;
            finalize_stats(out.stats, stream);
            return out;
          }
          case SprtOutcome::RejectH0:
            disqualified.push_back(c);
            ++out.stats.labels_rejected;
            break;
          case SprtOutcome::Inconclusive:
            break;
        }
      }
    }
  } catch (const TransportError& e) {
    RepairStats partial = out.stats;
    finalize_stats(partial, stream);
    throw RepairAborted(e.what(), partial);
  }

  out.decision = RepairDecision::BudgetExhausted;
  out.text = x;
  finalize_stats(out.stats, stream);
  return out;
}

VoteRateResult voting_hypothesis_rate(const std::string& x_adv,
                                      const std::string& truth_label,
                                      const RepairConfig& config,
                                      const PerturbContext& ctx, long long n) {
  config.validate();
  if (n < 1) throw ConfigError("voting_hypothesis_rate: n must be >= 1");

  const auto names = config.detector.models[0]->label_names();
  auto name_it = std::find(names->begin(), names->end(), truth_label);
  if (name_it == names->end()) {
    throw ConfigError("unknown ground-truth label \"" + truth_label + "\"");
  }
  const int truth = static_cast<int>(name_it - names->begin());

  VoteRateResult r;
  PerturbationStream stream = open_stream(split_sentences(x_adv), config.perturb,
                                          ctx);
  while (r.sampled < n) {
    std::optional<std::string> candidate = stream.next();
    if (!candidate) {
      r.exhausted_early = true;
      break;
    }
    DetectionVerdict v = is_adversarial(*candidate, config.detector);
    if (v.adversarial) continue;
    ++r.sampled;
    if (v.labels[0] == truth) ++r.matching;
  }
  r.rate = r.sampled > 0
               ? static_cast<double>(r.matching) / static_cast<double>(r.sampled)
               : 0.0;
  return r;
}

}  // namespace textrepair
