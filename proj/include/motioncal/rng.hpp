#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>

namespace motioncal {

// splitmix64 finalizer; used both for seed derivation and stateless hashing.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }

// Deterministic RNG. mt19937_64 is fully specified by the standard; the
// distributions below are hand-rolled because the std ones are not, and
// identical streams across platforms are part of the reproducibility
// contract.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(mix64(seed)) {}

  // Independent child stream; derivation depends only on (seed, tag).
  Rng child(uint64_t tag) const { return Rng(mix64(seed_, tag)); }

  uint64_t seed() const { return seed_; }

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t uniform_index(uint64_t n) {
    // Rejection-free modulo bias is negligible for the n used here, but be
    // exact anyway.
    uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = gen_();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stateless hash of double payloads, for noise that must not depend on
// evaluation order (e.g. tracker queries issued from parallel loops).
inline uint64_t hash_doubles(uint64_t seed, double a, double b) {
  uint64_t h = mix64(seed, std::bit_cast<uint64_t>(a));
  return mix64(h, std::bit_cast<uint64_t>(b));
}

}  // namespace motioncal
