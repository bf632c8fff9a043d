#include "senc/fsprng.hpp"

#include <openssl/evp.h>

#include "senc/error.hpp"

namespace senc {

std::array<std::uint8_t, 32> sha256(const std::uint8_t* data, std::size_t len) {
  std::array<std::uint8_t, 32> out{};
  unsigned int written = 0;
  if (EVP_Digest(data, len, out.data(), &written, EVP_sha256(), nullptr) != 1 || written != 32)
    throw error("sha256 digest failed");
  return out;
}

void fsprng::refill() {
  std::array<std::uint8_t, 33> in;
  for (std::size_t i = 0; i < 32; ++i) in[i] = state_[i];

  in[32] = 0x01;
  auto block = sha256(in.data(), in.size());
  for (std::size_t w = 0; w < 4; ++w) {
    std::uint64_t word = 0;
    for (std::size_t b = 0; b < 8; ++b) word = (word << 8) | block[w * 8 + b];
    buf_[w] = static_cast<double>(word) * 0x1.0p-64;
  }

  in[32] = 0x00;
  state_ = sha256(in.data(), in.size());
  pos_ = 0;
}

double fsprng::next() {
  if (pos_ == 4) refill();
  return buf_[pos_++];
}

fsprng::key_type fsprng::key_from_seed(std::uint64_t seed) {
  std::array<std::uint8_t, 8> bytes;
  for (std::size_t i = 0; i < 8; ++i) bytes[i] = static_cast<std::uint8_t>(seed >> (56 - 8 * i));
  return sha256(bytes.data(), bytes.size());
}

std::vector<double> fsprng_stream(const fsprng::key_type& key, std::size_t n) {
  fsprng gen(key);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = gen.next();
  return out;
}

}  // namespace senc
