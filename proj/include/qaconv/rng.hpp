#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace qaconv {

// Thin wrapper over mt19937 with hand-rolled draws. std::uniform_*_distribution
// and std::shuffle are implementation-defined, which would break the
// byte-determinism contracts (same seed => same artifact bytes).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(static_cast<std::uint32_t>(seed ^ (seed >> 32))) {}

  std::uint32_t next_u32() { return eng_(); }

  /// Uniform integer in [0, n), n >= 1. Rejection sampling keeps it unbiased.
  std::uint32_t below(std::uint32_t n) {
    const std::uint32_t limit = UINT32_MAX - UINT32_MAX % n;
    std::uint32_t v = eng_();
    while (v >= limit) v = eng_();
    return v % n;
  }

  /// Uniform real in [0, 1).
  double unit() { return eng_() * (1.0 / 4294967296.0); }

  /// Uniform real in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Fisher-Yates, fixed draw order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = below(static_cast<std::uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937 eng_;
};

}  // namespace qaconv
