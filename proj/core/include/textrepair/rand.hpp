#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace textrepair {

// Deterministic random source.  std::mt19937_64 produces an identical bit
// stream everywhere, but the standard *distributions* (and std::shuffle) are
// implementation-defined, so reports produced on different standard libraries
// would diverge.  Everything random in this library goes through the helpers
// below instead.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform draw from [0, n).  n must be > 0.
  std::size_t uniform_index(std::size_t n) {
    // Rejection sampling over the top multiple of n avoids modulo bias.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return static_cast<std::size_t>(v % n);
  }

  // Uniform double in [0, 1).
  double uniform_real() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Fisher-Yates with uniform_index, so the permutation is the same on
  // every platform for a given seed.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 engine_;
};

// Stable mixing of a base seed with a per-item counter (e.g. a report id),
// so parallel workers derive independent, order-free streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace textrepair
