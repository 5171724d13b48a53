#pragma once

#include <optional>
#include <string>
#include <vector>

#include "textrepair/classifier.hpp"
#include "textrepair/detector.hpp"

namespace textrepair {

// One line of an input JSONL file.  "text" is required; "label" (string
// ground truth) and "adversarial" (boolean ground truth) are optional and
// drive the summary metrics when present.
struct DatasetItem {
  long long id = 0;    // 0-based position among the parsed records
  long long line = 0;  // 1-based line in the source file, for messages
  std::string text;
  std::optional<std::string> label;
  std::optional<bool> adversarial;
  std::optional<std::string> parse_error;  // set instead of fields when lenient
};

// Strict loader: any malformed line throws IoError naming the 1-based line.
// Lenient loader: malformed lines come back as items with parse_error set,
// so batch commands can report them and keep going.
std::vector<DatasetItem> load_dataset(const std::string& path, bool lenient);

// Items with both text and label, as training data.  Throws IoError naming
// the first line lacking a label.
std::vector<LabeledText> as_labeled(const std::vector<DatasetItem>& items);

// Calibration scores: JSONL {"d_kl": float, "adversarial": bool}. Strict.
std::vector<ScoredSample> load_scores(const std::string& path);

}  // namespace textrepair
