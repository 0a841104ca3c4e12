#pragma once

#include <cstdint>

namespace rhe {

// Counter-based deterministic RNG (splitmix64). The draw sequence depends
// only on the seed, independent of platform and standard library, which is
// what the reproducibility contract of the experiment protocol needs.
//
// A stream is single-owner: it may move between threads but must not be
// drawn from concurrently. Use derive() for per-item child streams.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform double in [0, 1), 53-bit resolution.
  double next_double();

  double next_uniform(double lo, double hi);

  // One draw consumed regardless of p; p <= 0 never fires, p >= 1 always.
  bool bernoulli(double p);

  // Uniform integer in [0, bound); bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound);

  // Child stream decorrelated from this one; derive(k) with distinct keys
  // yields independent sequences for parallel per-item use.
  RandomStream derive(std::uint64_t key) const;

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

 private:
  std::uint64_t state_;
};

}  // namespace rhe
