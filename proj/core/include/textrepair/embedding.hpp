#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace textrepair {

// Word vectors keyed by normalized (ASCII-lowercased) token.  Immutable
// after load; every query is read-only, so concurrent use needs no locking.
class EmbeddingStore {
public:
  using Entry = std::pair<std::string, std::vector<float>>;

  // Parse "token v1 v2 ... vD" lines.  The dimension comes from the first
  // line unless expected_dim pins it.  Duplicate tokens keep the first
  // occurrence.  Throws IoError naming the offending 1-based line number.
  static EmbeddingStore load(std::istream& in, std::optional<int> expected_dim = {});
  static EmbeddingStore load_file(const std::string& path,
                                  std::optional<int> expected_dim = {});

  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }

  // Lookup by token (normalized internally).  Null when out of vocabulary.
  const std::vector<float>* find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token) != nullptr; }

  // Entries in file order (the deterministic scan order for ranking).
  const std::vector<Entry>& entries() const { return entries_; }

private:
  int dim_ = 0;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;  // token -> entries_ slot
};

struct SynonymEntry {
  std::string token;
  double score = 0.0;  // cosine similarity, in [-1, 1]
};
using SynonymList = std::vector<SynonymEntry>;

// u·v / (‖u‖‖v‖); zero on either side is defined as similarity 0.
// Throws std::invalid_argument on dimension mismatch.
double cosine(std::span<const float> u, std::span<const float> v);
double cosine(std::span<const double> u, std::span<const double> v);

// Top-L in-vocabulary neighbours of `word` by cosine, never including the
// word itself; score ties order tokens lexicographically.  An OOV word has
// no neighbours (empty list — "no substitution possible", not an error).
SynonymList nearest_synonyms(const EmbeddingStore& store, std::string_view word,
                             int L);

}  // namespace textrepair
