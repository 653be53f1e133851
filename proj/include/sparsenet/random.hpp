#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace sparsenet {

/// Deterministic random stream.
///
/// Every draw is derived from raw mt19937_64 output with portable transforms,
/// so a given seed produces identical sequences with any standard library.
/// Independent substreams are obtained with derive(), which depends only on
/// the construction seed and the tag, never on how much of the parent stream
/// has been consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }

  Rng derive(std::uint64_t tag) const { return Rng(mix(seed_ ^ mix(tag + 0x632be59bd9b4e019ULL))); }

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n), unbiased.
  std::uint64_t index(std::uint64_t n);

  // Standard normal via Box-Muller (one value per call).
  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t x);

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace sparsenet
