#include "senc/permission.hpp"

#include <string>

#include "senc/error.hpp"
#include "senc/gaussian.hpp"

namespace senc {

permission assign_permission(const cipher_bundle& bundle, std::uint8_t level) {
  if (bundle.tiers.size() > 255)
    throw error("bundle holds more tiers than a permission can address");
  if (level < 1 || level > bundle.tiers.size())
    throw error("permission level " + std::to_string(level) +
                " out of range 1.." + std::to_string(bundle.tiers.size()));

  permission p;
  p.level = level;
  p.tier_count = std::uint8_t(bundle.tiers.size());
  p.mu.reserve(bundle.stats.size());
  p.sigma.reserve(bundle.stats.size());
  for (const auto& s : bundle.stats) {
    p.mu.push_back(s.mu);
    p.sigma.push_back(s.sigma);
  }
  for (std::uint8_t t = 0; t < level; ++t) {
    const tier_cipher& tc = bundle.tiers[t];
    p.tiers.push_back({tc.key, tc.lo, tc.hi, tc.indices});
  }
  return p;
}

std::uint64_t permission_size_bits(std::uint64_t level, std::uint64_t tiers,
                                   std::uint64_t layers, std::uint64_t selected,
                                   std::uint64_t key_bits) {
  if (level > tiers) throw error("level exceeds tier count");
  if (level == 0) return 0;
  if (tiers == 0) throw error("tier count must be positive");
  return (key_bits + 64 * layers) * level +
         16 * layers * level * selected / tiers;
}

model decrypt_with_permission(const model& protected_model,
                              const permission& perm, double rho) {
  validate_model(protected_model);
  if (rho < 0.0) throw error("mask scale must be non-negative");
  const std::size_t slots = protected_model.considered.size();
  if (perm.mu.size() != slots || perm.sigma.size() != slots)
    throw error("permission layer count does not match the model");
  if (perm.level > perm.tier_count)
    throw error("permission level exceeds its tier count");
  if (perm.tiers.size() != perm.level)
    throw error("permission holds " + std::to_string(perm.tiers.size()) +
                " tier items for level " + std::to_string(perm.level));
  for (std::size_t s = 0; s < slots; ++s)
    if (!(perm.sigma[s] > 0.0))
      throw error("non-positive sigma in permission slot " + std::to_string(s));

  model out = protected_model;
  for (std::size_t t = 0; t < perm.tiers.size(); ++t) {
    const permission_tier& pt = perm.tiers[t];
    if (pt.lo.size() != slots || pt.hi.size() != slots ||
        pt.indices.size() != slots)
      throw error("tier " + std::to_string(t + 1) +
                  " geometry does not match the model");

    fsprng gen(pt.key);
    for (std::size_t s = 0; s < slots; ++s) {
      const std::vector<std::uint32_t>& idx = pt.indices[s];
      if (idx.empty()) continue;
      std::vector<double>& w = out.layers[protected_model.considered[s]].weights;
      for (std::uint32_t i : idx)
        if (i >= w.size())
          throw error("tier " + std::to_string(t + 1) + " index " +
                      std::to_string(i) + " outside layer " +
                      std::to_string(protected_model.considered[s]));

      std::vector<double> cipher;
      cipher.reserve(idx.size());
      for (std::uint32_t i : idx) cipher.push_back(w[i]);
      std::vector<double> masked = unmap_from_gaussian(
          cipher, perm.mu[s], perm.sigma[s], pt.lo[s], pt.hi[s]);
      const double scale = rho * perm.sigma[s];
      for (std::size_t j = 0; j < idx.size(); ++j) {
        double r = (2.0 * gen.next() - 1.0) * scale;
        w[idx[j]] = masked[j] - r;
      }
    }
  }
  return out;
}

}  // namespace senc
