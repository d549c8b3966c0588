#pragma once

#include <cstdint>
#include <initializer_list>

namespace irisvd {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen over <random> engines plus
// distributions because the distributions are not specified bit-for-bit
// across standard libraries; every draw here is fully defined.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // Uniform integer in [0, n); n > 0. Modulo bias is below 2^-40 for the n used here.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

private:
  std::uint64_t state_;
};

// Order-sensitive seed derivation: folds each part through the SplitMix64 finalizer.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = base;
  for (auto p : parts) {
    SplitMix64 g(h ^ (p * 0xD1B54A32D192ED03ULL));
    h = g.next();
  }
  return h;
}

}  // namespace irisvd
