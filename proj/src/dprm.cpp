#include "senc/dprm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "senc/error.hpp"
#include "senc/gaussian.hpp"

namespace senc {

std::vector<secret_key> tier_keys(std::uint64_t seed, std::size_t count) {
  std::vector<secret_key> keys;
  keys.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    keys.push_back(fsprng::key_from_seed(seed + i));
  return keys;
}

std::vector<layer_stats_entry> layer_stats(const model& m) {
  validate_model(m);
  std::vector<layer_stats_entry> stats;
  stats.reserve(m.considered.size());
  for (std::uint16_t l : m.considered) {
    const std::vector<double>& w = m.layers[l].weights;
    if (w.size() < 2)
      throw error("layer " + std::to_string(l) +
                  " is too small for spread statistics");
    double mu = 0.0;
    for (double x : w) mu += x;
    mu /= double(w.size());
    double ss = 0.0;
    for (double x : w) ss += (x - mu) * (x - mu);
    double sigma = std::sqrt(ss / double(w.size() - 1));
    if (!(sigma > 0.0))
      throw error("layer " + std::to_string(l) + " has zero weight spread");
    stats.push_back({l, mu, sigma});
  }
  return stats;
}

std::vector<std::vector<double>> rand_mask(
    const std::vector<std::vector<double>>& values_per_slot,
    const secret_key& key, const std::vector<layer_stats_entry>& stats,
    double rho) {
  if (values_per_slot.size() != stats.size())
    throw error("mask slot count does not match the layer stats");
  if (rho < 0.0) throw error("mask scale must be non-negative");
  std::size_t total = 0;
  for (const auto& slot : values_per_slot) total += slot.size();
  if (total == 0) throw error("mask input is empty");

  fsprng gen(key);
  std::vector<std::vector<double>> out(values_per_slot.size());
  for (std::size_t s = 0; s < values_per_slot.size(); ++s) {
    const double scale = rho * stats[s].sigma;
    out[s].reserve(values_per_slot[s].size());
    for (double v : values_per_slot[s])
      out[s].push_back(v + (2.0 * gen.next() - 1.0) * scale);
  }
  return out;
}

std::vector<double> map_to_gaussian(const std::vector<double>& masked,
                                    double mu, double sigma, double& lo,
                                    double& hi) {
  if (masked.empty()) throw error("empty mapping cell");
  if (!(sigma > 0.0)) throw error("sigma must be positive");
  auto [mn_it, mx_it] = std::minmax_element(masked.begin(), masked.end());
  double pad = std::max(1e-9, 1e-6 * (*mx_it - *mn_it));
  lo = *mn_it - pad;
  hi = *mx_it + pad;
  if (!(lo < hi)) throw error("degenerate mapping bounds");
  std::vector<double> out;
  out.reserve(masked.size());
  for (double c : masked)
    out.push_back(gaussian_icdf((c - lo) / (hi - lo), mu, sigma));
  return out;
}

std::vector<double> unmap_from_gaussian(const std::vector<double>& cipher,
                                        double mu, double sigma, double lo,
                                        double hi) {
  if (!(sigma > 0.0)) throw error("sigma must be positive");
  if (!(lo < hi)) throw error("degenerate mapping bounds");
  std::vector<double> out;
  out.reserve(cipher.size());
  for (double c : cipher)
    out.push_back(gaussian_cdf(c, mu, sigma) * (hi - lo) + lo);
  return out;
}

std::pair<model, cipher_bundle> encrypt_model(const model& m,
                                              const dominated_partition& part,
                                              const std::vector<secret_key>& keys,
                                              double rho) {
  validate_model(m);
  if (rho < 0.0) throw error("mask scale must be non-negative");
  const std::size_t slots = m.considered.size();
  if (part.layers.size() != slots)
    throw error("partition does not cover the model's considered layers");
  for (std::size_t s = 0; s < slots; ++s) {
    if (part.layers[s].layer != m.considered[s])
      throw error("partition layer order does not match the model");
    if (part.layers[s].tiers.size() != part.tier_count)
      throw error("partition tier lists are inconsistent");
  }

  cipher_bundle bundle;
  bundle.rho = rho;
  bundle.stats = layer_stats(m);

  model out = m;
  for (std::size_t t = 0; t < part.tier_count; ++t) {
    tier_cipher tc;
    tc.lo.assign(slots, 0.0);
    tc.hi.assign(slots, 0.0);
    tc.indices.resize(slots);

    std::size_t total = 0;
    std::vector<std::vector<double>> vals(slots);
    for (std::size_t s = 0; s < slots; ++s) {
      tc.indices[s] = part.layers[s].tiers[t];
      const std::vector<double>& w = m.layers[m.considered[s]].weights;
      for (std::uint32_t i : tc.indices[s]) {
        if (i >= w.size())
          throw error("partition index " + std::to_string(i) +
                      " outside layer " + std::to_string(m.considered[s]));
        vals[s].push_back(w[i]);
      }
      total += tc.indices[s].size();
    }

    if (total > 0) {
      if (t >= keys.size())
        throw error("missing key for non-empty tier " + std::to_string(t + 1));
      tc.key = keys[t];
      auto masked = rand_mask(vals, tc.key, bundle.stats, rho);
      for (std::size_t s = 0; s < slots; ++s) {
        if (masked[s].empty()) continue;
        auto cipher = map_to_gaussian(masked[s], bundle.stats[s].mu,
                                      bundle.stats[s].sigma, tc.lo[s],
                                      tc.hi[s]);
        std::vector<double>& w = out.layers[m.considered[s]].weights;
        for (std::size_t j = 0; j < cipher.size(); ++j)
          w[tc.indices[s][j]] = cipher[j];
      }
    } else if (t < keys.size()) {
      tc.key = keys[t];
    }
    bundle.tiers.push_back(std::move(tc));
  }
  return {std::move(out), std::move(bundle)};
}

}  // namespace senc
