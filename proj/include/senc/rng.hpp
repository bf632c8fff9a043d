#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace senc {

// Deterministic random source. Only the raw mt19937_64 output is taken from
// the standard library (its word sequence is fully specified); all
// distributions are derived here so streams are identical across toolchains.
class rng {
 public:
  explicit rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform strictly inside (0, 1); safe where a log or logit follows.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via Box-Muller, one spare cached.
  double normal();

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  // Unbiased integer in [0, n) (Lemire's method).
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  // k distinct values from 0..n-1, in draw order.
  std::vector<std::size_t> choice(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace senc
