#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "senc/gates.hpp"
#include "senc/model.hpp"

namespace senc {

struct select_config {
  double fraction = 0.10;   // share of each considered layer's weights to select
  std::size_t tiers = 5;    // permission tiers the selection is split into
  std::size_t steps = 400;  // gate-optimization steps per layer
  double lr = 0.1;
  double momentum = 0.9;
  double lambda = 1e-2;     // sparsity pressure, averaged over the layer size
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  gate_params gates;
};

// Per-weight importance scores for one considered layer, each in (0, 1).
// Model weights stay frozen; only the gate logits are trained. With
// steps == 0 the result is the initialization value 0.5 everywhere.
std::vector<double> fit_importance(const model& m, const dataset& data,
                                   std::uint16_t layer,
                                   const select_config& cfg);

// Indices of the phi highest-importance weights, ascending. Ties are
// broken toward the lower index.
std::vector<std::uint32_t> select_dominated(const std::vector<double>& importance,
                                            std::size_t phi);

// Splits selected indices into `tiers` groups by importance quantiles
// computed over the selected values only (nearest-rank, right-inclusive).
// Tier 1 holds the most important weights. Equal quantile thresholds
// collapse upward, so coarse importance profiles can leave lower tiers
// empty; when that happens *degenerate is set instead of raising.
std::vector<std::vector<std::uint32_t>> partition_by_importance(
    const std::vector<std::uint32_t>& selected,
    const std::vector<double>& importance, std::size_t tiers,
    bool* degenerate = nullptr);

struct layer_partition {
  std::uint16_t layer = 0;
  std::vector<double> importance;                 // full layer, weight order
  std::vector<std::uint32_t> selected;            // ascending
  std::vector<std::vector<std::uint32_t>> tiers;  // tiers[t] ascending
};

struct dominated_partition {
  std::size_t tier_count = 0;
  std::vector<layer_partition> layers;  // ascending layer id
  bool degenerate = false;              // at least one tier ended up empty
};

// Runs the full selection pipeline over every considered layer of m.
// Per layer: fit importance, keep the top cfg.fraction of weights,
// split them into cfg.tiers groups. Layer l uses seed cfg.seed + l.
dominated_partition build_partition(const model& m, const dataset& data,
                                    const select_config& cfg);

struct location {
  std::uint16_t layer = 0;
  std::uint32_t index = 0;
};

// Flattens one tier of the partition to (layer, weight index) pairs,
// ordered by layer then index.
std::vector<location> locate(const dominated_partition& part, std::size_t tier);

}  // namespace senc
