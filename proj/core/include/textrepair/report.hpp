#pragma once

#include <optional>
#include <string>

namespace textrepair {

// One output line of the batch commands.  Serialized as a single JSON
// object; fields irrelevant to the run stay null/absent so a record is
// self-describing.  Invariant: repaired_text is non-null exactly when
// decision == "accepted".
struct ReportRecord {
  long long id = 0;
  std::string verdict;  // "adversarial" | "normal"
  double d_kl = 0.0;
  std::optional<std::string> label_before;
  std::optional<std::string> label_after;
  std::optional<std::string> repaired_text;
  long long candidates_generated = 0;
  long long candidates_filtered = 0;
  // "not_adversarial" | "accepted" | "budget_exhausted"; absent on
  // detect-only records.
  std::optional<std::string> decision;
  double wall_time_ms = 0.0;
  // Timing split for repair records: detection cost in milliseconds,
  // repair loop cost in seconds, provider time inside the translator.
  std::optional<double> detect_ms;
  std::optional<double> repair_s;
  std::optional<long long> translation_calls;
  std::optional<double> translation_ms;
  std::optional<std::string> error;  // per-line failure, batch continues

  std::string to_json_line() const;  // one compact JSON object, no newline
};

}  // namespace textrepair
