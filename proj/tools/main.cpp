// textrepair: batch front end for the detection/repair library.
//
// Subcommands: train, calibrate, detect, repair, simulate.  Batch commands
// read JSONL and write one report record per input line, in input order,
// whatever the worker count.  Summaries go to stderr so stdout stays a
// clean record stream when no --out file is given.
//
// Exit codes: 0 success, 1 configuration error, 2 file error, 3 transport
// error (a batch run that produced at least one good record still exits 0;
// per-line failures are recorded in the report instead).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "textrepair/classifier.hpp"
#include "textrepair/detector.hpp"
#include "textrepair/embedding.hpp"
#include "textrepair/error.hpp"
#include "textrepair/perturb.hpp"
#include "textrepair/rand.hpp"
#include "textrepair/repair.hpp"
#include "textrepair/services.hpp"
#include "textrepair/text.hpp"
#include "textrepair/voting.hpp"

using json = nlohmann::json;
using namespace textrepair;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

bool is_url(const std::string& s) {
  return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0;
}

// ---- options shared across subcommands -------------------------------------

struct ModelOpts {
  std::vector<std::string> models;          // files or http(s) endpoints
  std::vector<std::string> classifier_urls; // appended after --models
  std::vector<std::string> labels;          // label set for remote backends
  std::string embeddings;
};

struct ThresholdOpts {
  double epsilon = -1.0;  // negative: not set on the command line
  std::string calibration;
};

struct PerturbOpts {
  std::string method = "subw";
  int budget = 650;
  int g = 4;
  int L = 5;
  std::vector<std::string> languages;
  std::string source_language = "en";
  std::string translator_url;
  std::uint64_t seed = 0;
};

struct SprtOpts {
  double alpha = 0.1;
  double beta = 0.1;
  double rho = 0.8;
  double sigma = 0.16;
};

void add_model_flags(CLI::App* cmd, ModelOpts& o) {
  cmd->add_option("--models", o.models,
                  "model files or http(s) endpoints, comma separated")
      ->delimiter(',');
  cmd->add_option("--classifier-url", o.classifier_urls,
                  "remote classifier endpoint(s), appended after --models")
      ->delimiter(',');
  cmd->add_option("--labels", o.labels,
                  "label names (required for remote backends)")
      ->delimiter(',');
  cmd->add_option("--embeddings", o.embeddings,
                  "embedding store file (required for builtin models)");
}

void add_threshold_flags(CLI::App* cmd, ThresholdOpts& o) {
  cmd->add_option("--epsilon", o.epsilon, "divergence threshold");
  cmd->add_option("--calibration", o.calibration,
                  "calibration report to take epsilon from");
}

void add_perturb_flags(CLI::App* cmd, PerturbOpts& o) {
  cmd->add_option("--method", o.method, "rp, subw, or parap")
      ->check(CLI::IsMember({"rp", "subw", "parap"}));
  cmd->add_option("--budget", o.budget, "candidates per input");
  cmd->add_option("--g", o.g, "word positions substituted per candidate");
  cmd->add_option("--L", o.L, "synonyms considered per word");
  cmd->add_option("--languages", o.languages,
                  "round-trip languages for parap, comma separated")
      ->delimiter(',');
  cmd->add_option("--source-language", o.source_language,
                  "source language for parap");
  cmd->add_option("--translator-url", o.translator_url,
                  "translation endpoint for parap");
  cmd->add_option("--seed", o.seed, "base random seed");
}

void add_sprt_flags(CLI::App* cmd, SprtOpts& o) {
  cmd->add_option("--alpha", o.alpha, "false rejection bound");
  cmd->add_option("--beta", o.beta, "false acceptance bound");
  cmd->add_option("--rho", o.rho, "confidence threshold");
  cmd->add_option("--sigma", o.sigma, "indifference half-width");
}

// ---- file plumbing ----------------------------------------------------------

std::shared_ptr<const EmbeddingStore> load_store(const std::string& path) {
  if (path.empty()) {
    throw ConfigError("builtin models and substitution methods need --embeddings");
  }
  return std::make_shared<const EmbeddingStore>(EmbeddingStore::load_file(path));
}

std::vector<std::shared_ptr<const Classifier>> load_models(
    const ModelOpts& o, std::shared_ptr<const EmbeddingStore>& store) {
  std::vector<std::string> entries = o.models;
  entries.insert(entries.end(), o.classifier_urls.begin(),
                 o.classifier_urls.end());
  if (entries.empty()) throw ConfigError("no models given; set --models");

  std::vector<std::shared_ptr<const Classifier>> out;
  for (const std::string& entry : entries) {
    if (is_url(entry)) {
      if (o.labels.empty()) {
        throw ConfigError("remote classifier " + entry +
                          " needs --labels to name its label set");
      }
      out.push_back(std::make_shared<RemoteClassifier>(entry, entry, o.labels));
    } else {
      if (store == nullptr) store = load_store(o.embeddings);
      out.push_back(
          std::make_shared<BuiltinClassifier>(entry, BuiltinModel::load(entry), store));
    }
  }
  return out;
}

// ---- config files -----------------------------------------------------------

// CLI11 applies a config file only when the top-level app owns it; one
// attached to a subcommand is stored and never read back.  --config lives on
// the subcommands here, so expand it by hand before CLI11 parses: read the
// flat key=value file and splice the pairs in as flags right after the
// subcommand name.  Keys the command line already sets are dropped (typed
// flags win), as are keys that name no option of the subcommand.
void add_config_flag(CLI::App* cmd) {
  cmd->set_config("--config", "",
                  "flat key=value defaults; explicit flags win");
}

std::string trim_ends(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> splice_config(std::vector<std::string> args,
                                       const std::vector<CLI::App*>& subs) {
  std::size_t sub_at = args.size();
  const CLI::App* sub = nullptr;
  for (std::size_t i = 0; i < args.size() && sub == nullptr; ++i) {
    if (!args[i].empty() && args[i][0] == '-') continue;
    for (const CLI::App* s : subs) {
      if (args[i] == s->get_name()) {
        sub = s;
        sub_at = i;
        break;
      }
    }
    break;  // only the first non-flag token can name the subcommand
  }
  if (sub == nullptr) return args;

  std::string path;
  for (std::size_t i = args.size(); i-- > sub_at + 1;) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      if (path.empty()) path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
    } else if (args[i].rfind("--config=", 0) == 0) {
      if (path.empty()) path = args[i].substr(9);
      args.erase(args.begin() + i);
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");

  std::set<std::string> known;
  for (const CLI::Option* opt : sub->get_options())
    for (const std::string& name : opt->get_lnames()) known.insert(name);

  auto given = [&](const std::string& flag) {
    for (std::size_t i = sub_at + 1; i < args.size(); ++i)
      if (args[i] == flag || args[i].rfind(flag + "=", 0) == 0) return true;
    return false;
  };

  std::vector<std::string> extra;
  std::string line;
  while (std::getline(in, line)) {
    line = trim_ends(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[')
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = trim_ends(line.substr(0, eq));
    std::string value = trim_ends(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty() || key == "config" || known.count(key) == 0) continue;
    const std::string flag = "--" + key;
    if (given(flag)) continue;
    extra.push_back(value.empty() ? flag : flag + "=" + value);
  }
  args.insert(args.begin() + sub_at + 1, extra.begin(), extra.end());
  return args;
}

double resolve_epsilon(const ThresholdOpts& o) {
  if (o.epsilon >= 0.0) return o.epsilon;  // flag wins over the file
  if (o.calibration.empty()) {
    throw ConfigError("no threshold: set --epsilon or --calibration");
  }
  std::ifstream in(o.calibration);
  if (!in) throw IoError(o.calibration + ": cannot open");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.contains("epsilon") || !j["epsilon"].is_number()) {
    throw IoError(o.calibration + ": not a calibration report (no \"epsilon\")");
  }
  return j["epsilon"].get<double>();
}

std::vector<LabeledText> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  std::vector<LabeledText> out;
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    const std::string where = path + ":" + std::to_string(no);
    if (j.is_discarded()) throw IoError(where + ": invalid JSON");
    if (!j.contains("text") || !j["text"].is_string()) {
      throw IoError(where + ": missing \"text\"");
    }
    if (!j.contains("label") || !j["label"].is_string()) {
      throw IoError(where + ": missing \"label\"");
    }
    out.push_back({j["text"].get<std::string>(), j["label"].get<std::string>()});
  }
  return out;
}

// One line of a detect/repair input file.  Malformed lines become error
// records instead of stopping the run.
struct InputItem {
  json id;
  std::string text;
  std::optional<std::string> truth_label;
  std::optional<bool> truth_adversarial;
  std::string error;  // non-empty: this line never reaches the pipeline
};

std::vector<InputItem> read_inputs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  std::vector<InputItem> out;
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    InputItem item;
    item.id = no;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      item.error = "invalid JSON";
      out.push_back(std::move(item));
      continue;
    }
    if (j.contains("id")) {
      if (j["id"].is_string() || j["id"].is_number()) {
        item.id = j["id"];
      } else {
        item.error = "\"id\" must be a string or number";
        out.push_back(std::move(item));
        continue;
      }
    }
    if (!j.contains("text") || !j["text"].is_string()) {
      item.error = "missing \"text\"";
      out.push_back(std::move(item));
      continue;
    }
    item.text = j["text"].get<std::string>();
    if (j.contains("label")) {
      if (!j["label"].is_string()) {
        item.error = "\"label\" must be a string";
        out.push_back(std::move(item));
        continue;
      }
      item.truth_label = j["label"].get<std::string>();
    }
    if (j.contains("adversarial")) {
      if (!j["adversarial"].is_boolean()) {
        item.error = "\"adversarial\" must be a boolean";
        out.push_back(std::move(item));
        continue;
      }
      item.truth_adversarial = j["adversarial"].get<bool>();
    }
    out.push_back(std::move(item));
  }
  return out;
}

class ReportWriter {
public:
  explicit ReportWriter(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw IoError(path + ": cannot write");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
  std::ofstream file_;
};

// Run fn(0..n-1) on a small pool; items are claimed atomically, so output
// order is restored by indexing, not by completion order.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers < 1) throw ConfigError("--workers must be at least 1");
  const int pool = static_cast<int>(std::min<std::size_t>(n, workers));
  if (pool <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(pool);
  for (int t = 0; t < pool; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (std::thread& t : threads) t.join();
}

// Ground truth for the summary lines: an explicit "adversarial" field wins;
// otherwise a truth label that the first model gets wrong marks the input
// as adversarial (the same proxy the calibration set is built on).
std::optional<bool> truth_adversarial(const InputItem& item,
                                      const std::string& label_before) {
  if (item.truth_adversarial) return item.truth_adversarial;
  if (item.truth_label) return *item.truth_label != label_before;
  return std::nullopt;
}

int batch_exit(std::size_t ok, std::size_t transport) {
  return (ok == 0 && transport > 0) ? 3 : 0;
}

// ---- train ------------------------------------------------------------------

struct TrainOpts {
  std::string dataset;
  std::string embeddings;
  std::string out = "model.json";
  std::vector<std::string> labels;
  int epochs = 200;
  double learning_rate = 0.5;
  int batch_size = 16;
  std::uint64_t seed = 0;
};

int run_train(const TrainOpts& o) {
  auto store = load_store(o.embeddings);
  std::vector<LabeledText> data = read_dataset(o.dataset);

  // Deterministic 80/20 split: shuffle once with a salted seed, hold out the
  // tail fifth.  The same seed reproduces the same split and model bytes.
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(o.seed, 0x74657374u));
  rng.shuffle(order);
  const std::size_t n_test = data.size() / 5;
  std::vector<LabeledText> train, test;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < order.size() - n_test ? train : test).push_back(data[order[i]]);
  }

  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.learning_rate;
  cfg.batch_size = o.batch_size;
  cfg.seed = o.seed;
  cfg.label_names = o.labels;
  BuiltinModel model = train_builtin(train, *store, cfg);
  model.embedding_ref = o.embeddings;

  BuiltinClassifier clf("trained", model, store);
  std::cout << "train accuracy " << fmt4(label_accuracy(clf, train)) << "\n";
  if (!test.empty()) {
    std::cout << "test accuracy " << fmt4(label_accuracy(clf, test)) << "\n";
  }
  model.save(o.out);
  std::cout << "wrote " << o.out << "\n";
  return 0;
}

// ---- calibrate ----------------------------------------------------------------

struct CalibrateOpts {
  std::string dataset;
  ModelOpts models;
  std::string out = "calibration.json";
  double tol = 1e-3;
};

int run_calibrate(const CalibrateOpts& o) {
  std::shared_ptr<const EmbeddingStore> store;
  auto models = load_models(o.models, store);
  if (models.size() != 2) throw ConfigError("calibration works over exactly 2 models");
  const auto names = models[0]->label_names();
  std::vector<LabeledText> data = read_dataset(o.dataset);

  // The calibration set: every sample the first model gets wrong, balanced
  // with the same number of correctly classified ones (file order).
  std::vector<ScoredSample> wrong, right;
  for (const LabeledText& item : data) {
    ProbVector p1 = models[0]->classify(item.text);
    ProbVector p2 = models[1]->classify(item.text);
    const std::string& predicted = (*names)[label_of(p1)];
    ScoredSample s{kl_divergence(p1, p2), predicted != item.label};
    (s.adversarial ? wrong : right).push_back(s);
  }
  if (wrong.empty()) {
    throw ConfigError(
        "no misclassified samples to calibrate on; use a larger or harder dataset");
  }
  std::vector<ScoredSample> scored = wrong;
  const std::size_t take = std::min(right.size(), wrong.size());
  scored.insert(scored.end(), right.begin(), right.begin() + take);

  double hi = 10.0;
  for (const ScoredSample& s : scored) hi = std::max(hi, s.d_kl * 1.05);
  CalibrationResult r = calibrate_epsilon(scored, 0.0, hi, o.tol);

  const bool low_confidence = wrong.size() < 5;
  json report;
  report["epsilon"] = r.epsilon;
  report["accuracy"] = r.accuracy;
  report["iterations"] = r.iterations;
  report["samples"] = scored.size();
  report["misclassified"] = wrong.size();
  report["low_confidence"] = low_confidence;
  std::ofstream out(o.out);
  if (!out) throw IoError(o.out + ": cannot write");
  out << report.dump(2) << "\n";

  std::cout << "epsilon " << r.epsilon << " accuracy " << fmt4(r.accuracy)
            << " (" << scored.size() << " samples)\n";
  if (low_confidence) {
    std::cerr << "warning: only " << wrong.size()
              << " misclassified sample(s); epsilon has low confidence\n";
  }
  std::cout << "wrote " << o.out << "\n";
  return 0;
}

// ---- detect -------------------------------------------------------------------

struct DetectOpts {
  std::string input;
  ModelOpts models;
  ThresholdOpts threshold;
  std::string out;
  int workers = 1;
  bool no_timing = false;
};

json detect_record(const json& id, const DetectionVerdict& v,
                   const std::vector<std::string>& names, double wall_ms) {
  json rec;
  rec["id"] = id;
  rec["verdict"] = v.adversarial;
  rec["d_kl"] = v.d_kl;
  rec["label_before"] = names[v.labels[0]];
  rec["label_after"] = nullptr;
  rec["repaired_text"] = nullptr;
  rec["candidates_generated"] = 0;
  rec["candidates_filtered"] = 0;
  rec["decision"] = nullptr;
  rec["wall_time_ms"] = wall_ms;
  return rec;
}

int run_detect(const DetectOpts& o) {
  DetectorConfig dc;
  dc.epsilon = resolve_epsilon(o.threshold);
  std::shared_ptr<const EmbeddingStore> store;
  dc.models = load_models(o.models, store);
  if (dc.models.size() > 3) throw ConfigError("detect takes 2 or 3 models");
  dc.validate();
  const auto names = dc.models[0]->label_names();

  std::vector<InputItem> items = read_inputs(o.input);
  std::vector<std::string> lines(items.size());
  struct Row {
    bool ok = false;
    bool transport = false;
    DetectionVerdict verdict;
  };
  std::vector<Row> rows(items.size());

  parallel_for(items.size(), o.workers, [&](std::size_t i) {
    const InputItem& item = items[i];
    json rec;
    if (!item.error.empty()) {
      rec["id"] = item.id;
      rec["error"] = item.error;
      lines[i] = rec.dump();
      return;
    }
    const auto t0 = Clock::now();
    try {
      DetectionVerdict v = dc.models.size() == 3
                               ? is_adversarial_multi(item.text, dc)
                               : is_adversarial(item.text, dc);
      rows[i] = {true, false, v};
      rec = detect_record(item.id, v, *names, o.no_timing ? 0.0 : ms_since(t0));
    } catch (const TransportError& e) {
      rows[i].transport = true;
      rec["id"] = item.id;
      rec["error"] = e.what();
    }
    lines[i] = rec.dump();
  });

  ReportWriter writer(o.out);
  for (const std::string& line : lines) writer.stream() << line << "\n";

  // dr/fp summary over the items that carry ground truth.
  std::vector<std::pair<DetectionVerdict, bool>> truthed;
  std::size_t ok = 0, transport = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    ok += rows[i].ok;
    transport += rows[i].transport;
    if (!rows[i].ok) continue;
    auto truth = truth_adversarial(items[i], (*names)[rows[i].verdict.labels[0]]);
    if (truth) truthed.push_back({rows[i].verdict, *truth});
  }
  if (!truthed.empty()) {
    DetectionMetrics m = detection_metrics(truthed);
    std::cerr << "dr "
              << (m.detection_rate_undefined ? "n/a" : fmt4(m.detection_rate))
              << " fp "
              << (m.false_positive_undefined ? "n/a" : fmt4(m.false_positive_rate))
              << " (tp " << m.tp << " fp " << m.fp << " tn " << m.tn << " fn "
              << m.fn << ", " << truthed.size() << " with truth)\n";
  }
  return batch_exit(ok, transport);
}

// ---- repair -------------------------------------------------------------------

struct RepairCliOpts {
  std::string input;
  ModelOpts models;
  ThresholdOpts threshold;
  PerturbOpts perturb;
  SprtOpts sprt;
  std::string out;
  int workers = 1;
  bool no_timing = false;
};

PerturbMethod parse_method(const std::string& name) {
  if (name == "rp") return PerturbMethod::Random;
  if (name == "subw") return PerturbMethod::Importance;
  if (name == "parap") return PerturbMethod::BackTranslation;
  throw ConfigError("unknown method \"" + name + "\" (rp, subw, parap)");
}

const char* decision_name(RepairDecision d) {
  switch (d) {
    case RepairDecision::NotAdversarial: return "not_adversarial";
    case RepairDecision::Accepted: return "accepted";
    case RepairDecision::BudgetExhausted: return "budget_exhausted";
  }
  return "budget_exhausted";
}

int run_repair(const RepairCliOpts& o) {
  RepairConfig base;
  base.perturb.method = parse_method(o.perturb.method);
  base.perturb.budget = o.perturb.budget;
  base.perturb.max_substitutions = o.perturb.g;
  base.perturb.synonyms_per_word = o.perturb.L;
  base.perturb.languages = o.perturb.languages;
  base.perturb.source_language = o.perturb.source_language;
  base.sprt = SprtParams(o.sprt.alpha, o.sprt.beta, o.sprt.rho, o.sprt.sigma);
  base.perturb.validate();  // reject bad tunables before touching any file
  if (base.perturb.method == PerturbMethod::BackTranslation &&
      o.perturb.translator_url.empty()) {
    throw ConfigError("method parap needs --translator-url");
  }

  base.detector.epsilon = resolve_epsilon(o.threshold);
  std::shared_ptr<const EmbeddingStore> store;
  base.detector.models = load_models(o.models, store);
  base.validate();
  const auto names = base.detector.models[0]->label_names();

  PerturbContext ctx;
  if (base.perturb.method != PerturbMethod::BackTranslation) {
    if (store == nullptr) store = load_store(o.models.embeddings);
    ctx.embeddings = store;
  }
  ctx.f1 = base.detector.models[0];
  ctx.f2 = base.detector.models[1];
  std::unique_ptr<HttpTranslator> translator;
  if (!o.perturb.translator_url.empty()) {
    translator = std::make_unique<HttpTranslator>(o.perturb.translator_url);
    ctx.translator = translator.get();
  }

  std::vector<InputItem> items = read_inputs(o.input);
  std::vector<std::string> lines(items.size());
  struct Row {
    bool ok = false;
    bool transport = false;
    RepairDecision decision = RepairDecision::NotAdversarial;
    int label_before = -1;
    int label_after = -1;
  };
  std::vector<Row> rows(items.size());

  parallel_for(items.size(), o.workers, [&](std::size_t i) {
    const InputItem& item = items[i];
    json rec;
    if (!item.error.empty()) {
      rec["id"] = item.id;
      rec["error"] = item.error;
      lines[i] = rec.dump();
      return;
    }
    RepairConfig cfg = base;
    // Each input gets its own stream; candidate draws are independent of
    // worker scheduling and batch position.
    cfg.perturb.seed = mix_seed(o.perturb.seed, static_cast<std::uint64_t>(i));
    try {
      RepairOutcome r = repair(item.text, cfg, ctx);
      rows[i] = {true, false, r.decision, r.verdict.labels[0], r.label};
      rec["id"] = item.id;
      rec["verdict"] = r.verdict.adversarial;
      rec["d_kl"] = r.verdict.d_kl;
      rec["label_before"] = (*names)[r.verdict.labels[0]];
      if (r.decision == RepairDecision::Accepted) {
        rec["label_after"] = (*names)[r.label];
        rec["repaired_text"] = r.text;
      } else {
        rec["label_after"] = nullptr;
        rec["repaired_text"] = nullptr;
      }
      rec["decision"] = decision_name(r.decision);
      rec["candidates_generated"] = r.stats.candidates_generated;
      rec["candidates_filtered"] = r.stats.candidates_filtered;
      rec["labels_rejected"] = r.stats.labels_rejected;
      rec["translation_calls"] = r.stats.translation_calls;
      if (o.no_timing) {
        rec["detect_ms"] = 0.0;
        rec["repair_ms"] = 0.0;
        rec["wall_time_ms"] = 0.0;
        rec["translation_ms"] = 0.0;
      } else {
        rec["detect_ms"] = r.stats.detect_ms;
        rec["repair_ms"] = r.stats.wall_time_ms - r.stats.detect_ms;
        rec["wall_time_ms"] = r.stats.wall_time_ms;
        rec["translation_ms"] = r.stats.translation_ms;
      }
    } catch (const RepairAborted& e) {
      rows[i].transport = true;
      rec["id"] = item.id;
      rec["error"] = e.what();
      rec["candidates_generated"] = e.stats().candidates_generated;
      rec["candidates_filtered"] = e.stats().candidates_filtered;
      rec["translation_calls"] = e.stats().translation_calls;
    } catch (const TransportError& e) {
      rows[i].transport = true;
      rec["id"] = item.id;
      rec["error"] = e.what();
    }
    lines[i] = rec.dump();
  });

  ReportWriter writer(o.out);
  for (const std::string& line : lines) writer.stream() << line << "\n";

  // Overall repair accuracy: correctly repaired / ground-truth adversarial.
  long long adversarial = 0, correct = 0;
  std::size_t ok = 0, transport = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    ok += rows[i].ok;
    transport += rows[i].transport;
    if (!rows[i].ok || rows[i].label_before < 0) continue;
    auto truth = truth_adversarial(items[i], (*names)[rows[i].label_before]);
    if (!truth || !*truth) continue;
    ++adversarial;
    if (rows[i].decision == RepairDecision::Accepted && items[i].truth_label &&
        rows[i].label_after >= 0 &&
        (*names)[rows[i].label_after] == *items[i].truth_label) {
      ++correct;
    }
  }
  if (adversarial > 0) {
    std::cerr << "repair accuracy "
              << fmt4(double(correct) / double(adversarial)) << " (" << correct
              << "/" << adversarial << ")\n";
  }
  return batch_exit(ok, transport);
}

// ---- simulate -----------------------------------------------------------------

struct SimulateOpts {
  double q = -1.0;
  long long trials = 5000;
  long long max_samples = 10000;
  SprtOpts sprt;
  std::uint64_t seed = 0;
  std::string out;
};

int run_simulate(const SimulateOpts& o) {
  if (!(o.q > 0.0 && o.q <= 1.0)) throw ConfigError("--q must be in (0, 1]");
  if (o.trials < 1) throw ConfigError("--trials must be at least 1");
  if (o.max_samples < 1) throw ConfigError("--max-samples must be at least 1");
  SprtParams params(o.sprt.alpha, o.sprt.beta, o.sprt.rho, o.sprt.sigma);

  long long accepted = 0, rejected = 0, inconclusive = 0, decided_samples = 0;
  for (long long trial = 0; trial < o.trials; ++trial) {
    Rng rng(mix_seed(o.seed, static_cast<std::uint64_t>(trial)));
    SprtState state;
    SprtOutcome outcome = SprtOutcome::Inconclusive;
    while (state.total < o.max_samples) {
      state.observe(rng.uniform_real() < o.q ? 0 : 1);
      outcome = hyp_test(0, state, params);
      if (outcome != SprtOutcome::Inconclusive) break;
    }
    switch (outcome) {
      case SprtOutcome::AcceptH0: ++accepted; decided_samples += state.total; break;
      case SprtOutcome::RejectH0: ++rejected; decided_samples += state.total; break;
      case SprtOutcome::Inconclusive: ++inconclusive; break;
    }
  }

  const double n = static_cast<double>(o.trials);
  const long long decided = accepted + rejected;
  const double mean_samples =
      decided > 0 ? static_cast<double>(decided_samples) / double(decided) : 0.0;
  std::cout << "trials " << o.trials << "\n";
  std::cout << "accept_rate " << fmt4(accepted / n) << "\n";
  std::cout << "reject_rate " << fmt4(rejected / n) << "\n";
  std::cout << "inconclusive_rate " << fmt4(inconclusive / n) << "\n";
  std::cout << "mean_samples " << fmt4(mean_samples) << "\n";

  if (!o.out.empty()) {
    json report;
    report["trials"] = o.trials;
    report["q"] = o.q;
    report["accept_rate"] = accepted / n;
    report["reject_rate"] = rejected / n;
    report["inconclusive_rate"] = inconclusive / n;
    report["mean_samples"] = mean_samples;
    std::ofstream out(o.out);
    if (!out) throw IoError(o.out + ": cannot write");
    out << report.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differential detection and repair of adversarial text"};
  app.require_subcommand(1);

  TrainOpts train_opts;
  CLI::App* train = app.add_subcommand("train", "fit a builtin model on JSONL data");
  add_config_flag(train);
  train->add_option("dataset", train_opts.dataset, "JSONL {\"text\",\"label\"}")
      ->required();
  train->add_option("--embeddings", train_opts.embeddings, "embedding store file")
      ->required();
  train->add_option("--out", train_opts.out, "model file to write");
  train->add_option("--labels", train_opts.labels,
                    "fixed label set (default: from data)")
      ->delimiter(',');
  train->add_option("--epochs", train_opts.epochs, "training epochs");
  train->add_option("--lr", train_opts.learning_rate, "learning rate");
  train->add_option("--batch", train_opts.batch_size, "mini-batch size");
  train->add_option("--seed", train_opts.seed, "init and shuffle seed");

  CalibrateOpts cal_opts;
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "pick epsilon from a labeled dataset");
  add_config_flag(calibrate);
  calibrate->add_option("dataset", cal_opts.dataset, "labeled JSONL")->required();
  add_model_flags(calibrate, cal_opts.models);
  calibrate->add_option("--out", cal_opts.out, "report file to write");
  calibrate->add_option("--tol", cal_opts.tol, "search tolerance");

  DetectOpts detect_opts;
  CLI::App* detect = app.add_subcommand("detect", "flag adversarial inputs");
  add_config_flag(detect);
  detect->add_option("input", detect_opts.input, "JSONL inputs")->required();
  add_model_flags(detect, detect_opts.models);
  add_threshold_flags(detect, detect_opts.threshold);
  detect->add_option("--out", detect_opts.out, "report file (default: stdout)");
  detect->add_option("--workers", detect_opts.workers, "worker threads");
  detect->add_flag("--no-timing", detect_opts.no_timing,
                   "zero timing fields for byte-stable reports");

  RepairCliOpts repair_opts;
  CLI::App* repair = app.add_subcommand("repair", "detect and repair inputs");
  add_config_flag(repair);
  repair->add_option("input", repair_opts.input, "JSONL inputs")->required();
  add_model_flags(repair, repair_opts.models);
  add_threshold_flags(repair, repair_opts.threshold);
  add_perturb_flags(repair, repair_opts.perturb);
  add_sprt_flags(repair, repair_opts.sprt);
  repair->add_option("--out", repair_opts.out, "report file (default: stdout)");
  repair->add_option("--workers", repair_opts.workers, "worker threads");
  repair->add_flag("--no-timing", repair_opts.no_timing,
                   "zero timing fields for byte-stable reports");

  SimulateOpts sim_opts;
  CLI::App* simulate =
      app.add_subcommand("simulate", "Monte-Carlo check of the vote test");
  add_config_flag(simulate);
  simulate->add_option("--q", sim_opts.q, "per-candidate hit probability")
      ->required();
  simulate->add_option("--trials", sim_opts.trials, "simulated streams");
  simulate->add_option("--max-samples", sim_opts.max_samples,
                       "cap per stream before giving up");
  add_sprt_flags(simulate, sim_opts.sprt);
  simulate->add_option("--seed", sim_opts.seed, "stream seed");
  simulate->add_option("--out", sim_opts.out, "JSON report file");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = splice_config(std::move(args),
                         {train, calibrate, detect, repair, simulate});
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::reverse(args.begin(), args.end());  // the vector overload wants them reversed

  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help/version exit clean, bad flags are config errors
  }

  try {
    if (train->parsed()) return run_train(train_opts);
    if (calibrate->parsed()) return run_calibrate(cal_opts);
    if (detect->parsed()) return run_detect(detect_opts);
    if (repair->parsed()) return run_repair(repair_opts);
    if (simulate->parsed()) return run_simulate(sim_opts);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
