#include "textrepair/report.hpp"

#include <nlohmann/json.hpp>

namespace textrepair {

using nlohmann::json;

std::string ReportRecord::to_json_line() const {
  json j;
  j["id"] = id;
  j["verdict"] = verdict;
  j["d_kl"] = d_kl;
  j["label_before"] = label_before ? json(*label_before) : json(nullptr);
  j["label_after"] = label_after ? json(*label_after) : json(nullptr);
  j["repaired_text"] = repaired_text ? json(*repaired_text) : json(nullptr);
  j["candidates_generated"] = candidates_generated;
  j["candidates_filtered"] = candidates_filtered;
  if (decision) j["decision"] = *decision;
  j["wall_time_ms"] = wall_time_ms;
  if (detect_ms) j["detect_ms"] = *detect_ms;
  if (repair_s) j["repair_s"] = *repair_s;
  if (translation_calls) j["translation_calls"] = *translation_calls;
  if (translation_ms) j["translation_ms"] = *translation_ms;
  if (error) j["error"] = *error;
  return j.dump();
}

}  // namespace textrepair
