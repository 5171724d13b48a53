#include "textrepair/dataset.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "textrepair/error.hpp"

namespace textrepair {

using nlohmann::json;

namespace {

std::string line_msg(long long line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

}  // namespace

std::vector<DatasetItem> load_dataset(const std::string& path, bool lenient) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset: " + path);

  std::vector<DatasetItem> items;
  std::string raw;
  long long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty()) continue;

    DatasetItem item;
    item.id = static_cast<long long>(items.size());
    item.line = line_no;

    std::string problem;
    json j = json::parse(raw, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      problem = "not a JSON object";
    } else if (!j.contains("text") || !j["text"].is_string()) {
      problem = "missing \"text\" string";
    } else {
      item.text = j["text"].get<std::string>();
      if (j.contains("label")) {
        if (!j["label"].is_string()) {
          problem = "\"label\" is not a string";
        } else {
          item.label = j["label"].get<std::string>();
        }
      }
      if (problem.empty() && j.contains("adversarial")) {
        if (!j["adversarial"].is_boolean()) {
          problem = "\"adversarial\" is not a boolean";
        } else {
          item.adversarial = j["adversarial"].get<bool>();
        }
      }
    }

    if (!problem.empty()) {
      if (!lenient) throw IoError("dataset " + path + ", " + line_msg(line_no, problem));
      item.parse_error = line_msg(line_no, problem);
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<LabeledText> as_labeled(const std::vector<DatasetItem>& items) {
  std::vector<LabeledText> out;
  out.reserve(items.size());
  for (const DatasetItem& item : items) {
    if (item.parse_error) throw IoError(*item.parse_error);
    if (!item.label) {
      throw IoError(line_msg(item.line, "missing \"label\" key"));
    }
    out.push_back({item.text, *item.label});
  }
  return out;
}

std::vector<ScoredSample> load_scores(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open score file: " + path);

  std::vector<ScoredSample> out;
  std::string raw;
  long long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty()) continue;
    json j = json::parse(raw, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("d_kl") ||
        !j["d_kl"].is_number() || !j.contains("adversarial") ||
        !j["adversarial"].is_boolean()) {
      throw IoError("score file " + path + ", " +
                    line_msg(line_no, "expected {\"d_kl\": number, \"adversarial\": bool}"));
    }
    out.push_back({j["d_kl"].get<double>(), j["adversarial"].get<bool>()});
  }
  return out;
}

}  // namespace textrepair
