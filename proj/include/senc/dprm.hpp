#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "senc/fsprng.hpp"
#include "senc/model.hpp"
#include "senc/pss.hpp"

namespace senc {

using secret_key = fsprng::key_type;

// One 256-bit key per tier, derived from a base seed.
std::vector<secret_key> tier_keys(std::uint64_t seed, std::size_t count);

struct layer_stats_entry {
  std::uint16_t layer = 0;
  double mu = 0.0;
  double sigma = 0.0;

  bool operator==(const layer_stats_entry&) const = default;
};

// Mean and sample standard deviation (n-1 divisor) of every considered
// layer's weights, taken from the given model as-is. Call it on the
// pretrained model before masking; a layer with no spread is an error.
std::vector<layer_stats_entry> layer_stats(const model& m);

// Adds a keyed uniform mask in [-rho*sigma_s, rho*sigma_s) to every value;
// values are grouped per considered-layer slot and the key stream is
// consumed slot-major, element order as given. rho = 0 is the identity.
std::vector<std::vector<double>> rand_mask(
    const std::vector<std::vector<double>>& values_per_slot,
    const secret_key& key, const std::vector<layer_stats_entry>& stats,
    double rho);

// Min-max scales one cell of masked values into (0, 1) with symmetric
// padding, then pushes them through the inverse Gaussian CDF so the
// ciphertext is shaped like draws from N(mu, sigma). Stores the padded
// bounds in lo/hi; a single value maps exactly to mu.
std::vector<double> map_to_gaussian(const std::vector<double>& masked,
                                    double mu, double sigma, double& lo,
                                    double& hi);

// Exact inverse of map_to_gaussian given the stored bounds.
std::vector<double> unmap_from_gaussian(const std::vector<double>& cipher,
                                        double mu, double sigma, double lo,
                                        double hi);

struct tier_cipher {
  secret_key key{};
  // One slot per considered layer; empty cells keep lo == hi == 0.
  std::vector<double> lo, hi;
  std::vector<std::vector<std::uint32_t>> indices;

  bool operator==(const tier_cipher&) const = default;
};

struct cipher_bundle {
  double rho = 8.0;
  std::vector<layer_stats_entry> stats;  // considered layers, ascending
  std::vector<tier_cipher> tiers;        // tier 1 first

  bool operator==(const cipher_bundle&) const = default;
};

// Encrypts the partitioned weights in place of the originals: per tier,
// mask with that tier's key stream, then remap each layer cell onto the
// layer's weight distribution. Everything not located by the partition is
// left bit-identical. Returns the protected model and the bundle holding
// keys, bounds, stats, and locations.
std::pair<model, cipher_bundle> encrypt_model(const model& m,
                                              const dominated_partition& part,
                                              const std::vector<secret_key>& keys,
                                              double rho = 8.0);

}  // namespace senc
