#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace senc {

// SHA-256 of an arbitrary byte string.
std::array<std::uint8_t, 32> sha256(const std::uint8_t* data, std::size_t len);

// Forward-secure generator built on a hash chain. Each step hashes the
// current state with a domain byte: 0x01 yields the output block, 0x00
// yields the next state, and the old state is overwritten, so earlier
// outputs cannot be reconstructed from a captured state.
class fsprng {
 public:
  using key_type = std::array<std::uint8_t, 32>;

  explicit fsprng(const key_type& key) : state_(key) {}

  // Uniform double in [0, 1); four per output block, big-endian words.
  double next();

  // Current chain state; seeding a new generator with it continues the stream.
  const key_type& state() const { return state_; }

  static key_type key_from_seed(std::uint64_t seed);

 private:
  void refill();

  key_type state_;
  std::array<double, 4> buf_{};
  std::size_t pos_ = 4;
};

std::vector<double> fsprng_stream(const fsprng::key_type& key, std::size_t n);

}  // namespace senc
