#pragma once

#include <cstdint>
#include <vector>

#include "senc/dprm.hpp"
#include "senc/model.hpp"

namespace senc {

struct permission_tier {
  secret_key key{};
  std::vector<double> lo, hi;                       // per considered-layer slot
  std::vector<std::vector<std::uint32_t>> indices;  // per slot, flat positions

  bool operator==(const permission_tier&) const = default;
};

// Bearer credential releasing tiers 1..level of a protected model. Layer
// slots are positional: slot s addresses the s-th considered layer of the
// model the permission was issued for.
struct permission {
  std::uint8_t level = 0;       // released tiers
  std::uint8_t tier_count = 0;  // tiers the model was split into
  std::vector<double> mu, sigma;       // per slot
  std::vector<permission_tier> tiers;  // exactly `level` entries, tier 1 first

  bool operator==(const permission&) const = default;
};

// Copies the first `level` tier items plus the shared stats out of the
// bundle; nothing about deeper tiers is included.
permission assign_permission(const cipher_bundle& bundle, std::uint8_t level);

// Permission footprint in bits as reported: (key_bits + 64L) per released
// tier plus 16-bit positions for the released share of the selection.
std::uint64_t permission_size_bits(std::uint64_t level, std::uint64_t tiers,
                                   std::uint64_t layers, std::uint64_t selected,
                                   std::uint64_t key_bits = 256);

// Undoes encryption for tiers 1..perm.level and returns the result; deeper
// tiers stay ciphertext and the input model is never modified. rho must
// match the value used at encryption (it is not part of the credential);
// like a wrong key, a wrong rho silently yields garbage.
model decrypt_with_permission(const model& protected_model,
                              const permission& perm, double rho = 8.0);

}  // namespace senc
