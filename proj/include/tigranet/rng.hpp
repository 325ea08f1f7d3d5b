#ifndef TIGRANET_RNG_HPP
#define TIGRANET_RNG_HPP

#include <cstdint>

namespace tigranet {

// Deterministic 64-bit generator used for every random draw in the library
// (parameter initialization, dataset shuffling, transform sampling).
//
// The algorithm is SplitMix64 (Steele, Lea, Flood 2014) and is part of the
// file-format/reproducibility contract: a reimplementation in any language
// that follows the update below reproduces identical streams.
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   output = z ^ (z >> 31)
//
// Seeding: the state is the seed value itself, no warm-up draws.
// uniform01() maps the top 53 bits to [0,1) as (bits >> 11) * 2^-53.
// below(n) uses unbiased rejection on the 2^64 mod n residue classes.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n), unbiased. n must be nonzero.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % n;
    }
  }

  // Derives an independent stream for a tagged sub-task (per-image transforms,
  // per-epoch shuffles). Defined as SplitMix64(seed ^ mix(tag)).next() so the
  // rule is reproducible across implementations.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    SplitMix64 t(tag);
    SplitMix64 s(seed ^ t.next());
    return s.next();
  }

 private:
  std::uint64_t state_;
};

}  // namespace tigranet

#endif  // TIGRANET_RNG_HPP
