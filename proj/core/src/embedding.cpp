#include "textrepair/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "textrepair/error.hpp"
#include "textrepair/text.hpp"

namespace textrepair {

namespace {

// Parse the floats after the token. Fields are single-space separated.
bool parse_floats(std::string_view rest, std::vector<float>& out) {
  std::size_t i = 0;
  while (i < rest.size()) {
    while (i < rest.size() && rest[i] == ' ') ++i;
    if (i >= rest.size()) break;
    std::size_t j = i;
    while (j < rest.size() && rest[j] != ' ') ++j;
    float v = 0.f;
    auto [p, ec] = std::from_chars(rest.data() + i, rest.data() + j, v);
    if (ec != std::errc() || p != rest.data() + j) return false;
    out.push_back(v);
    i = j;
  }
  return true;
}

template <typename T>
double cosine_impl(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine: dimension mismatch");
  }
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    nu += static_cast<double>(u[i]) * u[i];
    nv += static_cast<double>(v[i]) * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace

EmbeddingStore EmbeddingStore::load(std::istream& in,
                                    std::optional<int> expected_dim) {
  EmbeddingStore store;
  if (expected_dim) {
    if (*expected_dim <= 0) throw ConfigError("embedding dimension must be positive");
    store.dim_ = *expected_dim;
  }
  std::string line;
  std::size_t line_no = 0;
  bool any_nonzero = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t sp = line.find(' ');
    if (sp == std::string::npos || sp == 0) {
      throw IoError("embedding line " + std::to_string(line_no) +
                    ": expected \"token v1 v2 ...\"");
    }
    std::string token = normalize_token(std::string_view(line).substr(0, sp));
    std::vector<float> vec;
    if (!parse_floats(std::string_view(line).substr(sp + 1), vec)) {
      throw IoError("embedding line " + std::to_string(line_no) +
                    ": unparsable float");
    }
    if (vec.empty()) {
      throw IoError("embedding line " + std::to_string(line_no) + ": no values");
    }
    if (store.dim_ == 0) {
      store.dim_ = static_cast<int>(vec.size());
    } else if (static_cast<int>(vec.size()) != store.dim_) {
      throw IoError("embedding line " + std::to_string(line_no) + ": expected " +
                    std::to_string(store.dim_) + " values, got " +
                    std::to_string(vec.size()));
    }
    if (store.index_.count(token)) continue;  // first occurrence wins
    if (!any_nonzero) {
      for (float f : vec) {
        if (f != 0.f) { any_nonzero = true; break; }
      }
    }
    store.index_.emplace(token, store.entries_.size());
    store.entries_.emplace_back(std::move(token), std::move(vec));
  }
  if (store.entries_.empty()) throw IoError("embedding stream has no entries");
  if (!any_nonzero) throw IoError("embedding stream holds only zero vectors");
  return store;
}

EmbeddingStore EmbeddingStore::load_file(const std::string& path,
                                         std::optional<int> expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file: " + path);
  return load(in, expected_dim);
}

const std::vector<float>* EmbeddingStore::find(std::string_view token) const {
  auto it = index_.find(normalize_token(token));
  if (it == index_.end()) return nullptr;
  return &entries_[it->second].second;
}

double cosine(std::span<const float> u, std::span<const float> v) {
  return cosine_impl(u, v);
}

double cosine(std::span<const double> u, std::span<const double> v) {
  return cosine_impl(u, v);
}

SynonymList nearest_synonyms(const EmbeddingStore& store, std::string_view word,
                             int L) {
  if (L < 1) throw std::invalid_argument("nearest_synonyms: L must be >= 1");
  std::string key = normalize_token(word);
  const std::vector<float>* query = store.find(key);
  if (query == nullptr) return {};

  SynonymList scored;
  scored.reserve(store.size());
  for (const auto& [token, vec] : store.entries()) {
    if (token == key) continue;
    scored.push_back({token, cosine(std::span<const float>(*query),
                                    std::span<const float>(vec))});
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const SynonymEntry& a, const SynonymEntry& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.token < b.token;
                   });
  if (scored.size() > static_cast<std::size_t>(L)) {
    scored.resize(static_cast<std::size_t>(L));
  }
  return scored;
}

}  // namespace textrepair
