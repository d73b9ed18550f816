#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace faseg {

/// Derive an independent stream seed from a base seed and a stream tag
/// (splitmix64 finalizer). Pins sub-stream layout so runs reproduce.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  std::uint64_t z = base + tag * 0x9E3779B97F4A7C15ULL + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// mt19937_64 with hand-pinned value mappings. The <random> distributions
/// are implementation-defined, so they cannot back a byte-reproducibility
/// contract; these mappings can.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0,1) with 53 random bits.
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Standard normal via Box-Muller; consumes two uniforms per pair.
  double normal(double mean = 0.0, double sigma = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + sigma * spare_;
    }
    double u1 = unit();
    while (u1 <= 0.0) u1 = unit();
    const double u2 = unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return mean + sigma * (r * std::cos(theta));
  }

  /// Uniform integer in {0,...,n-1}; masked rejection keeps it unbiased.
  int below(int n) {
    std::uint64_t mask = 1;
    while (mask < static_cast<std::uint64_t>(n)) mask <<= 1;
    --mask;
    for (;;) {
      const std::uint64_t draw = eng_() & mask;
      if (draw < static_cast<std::uint64_t>(n)) return static_cast<int>(draw);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace faseg
