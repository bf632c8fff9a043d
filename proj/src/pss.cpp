#include "senc/pss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "senc/error.hpp"
#include "senc/nn.hpp"
#include "senc/rng.hpp"

namespace senc {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_scored_layer(const model& m, std::uint16_t layer) {
  if (layer >= m.layers.size())
    throw error("no layer " + std::to_string(layer));
  if (std::find(m.considered.begin(), m.considered.end(), layer) ==
      m.considered.end())
    throw error("layer " + std::to_string(layer) + " is not a considered layer");
  if (m.layers[layer].weights.empty())
    throw error("layer " + std::to_string(layer) + " has no weights to score");
}

}  // namespace

std::vector<double> fit_importance(const model& m, const dataset& data,
                                   std::uint16_t layer,
                                   const select_config& cfg) {
  validate_model(m);
  validate_dataset(data);
  check_scored_layer(m, layer);
  if (data.size() == 0) throw error("empty dataset");
  if (cfg.batch == 0) throw error("batch size must be positive");
  if (cfg.lr <= 0.0) throw error("step size must be positive");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw error("momentum must lie in [0, 1)");
  if (cfg.lambda < 0.0) throw error("sparsity weight must be non-negative");

  const std::vector<double>& w = m.layers[layer].weights;
  const std::size_t n = w.size();
  std::vector<double> alpha(n, 0.0), vel(n, 0.0);

  rng gen(cfg.seed);
  const std::size_t bsz = std::min(cfg.batch, data.size());
  std::vector<double> eff(bsz * n), dz(bsz * n), grad(n), gw;

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    std::vector<std::size_t> idx = gen.choice(data.size(), bsz);
    for (std::size_t b = 0; b < bsz; ++b) {
      for (std::size_t j = 0; j < n; ++j) {
        gate_sample g = sample_gate(alpha[j], gen.uniform_open(), cfg.gates);
        eff[b * n + j] = (1.0 - g.z) * w[j];
        dz[b * n + j] = g.dz_dlogit;
      }
    }

    weight_override ov{layer, &eff};
    double mean_loss = override_loss_grad(m, data, idx, ov, gw);

    // Minimized objective: -loss + lambda * mean gate-open probability.
    // Gates that stay open under that pressure mark the weights whose
    // removal hurts the model most.
    double open_mass = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      open_mass += prob_nonzero(alpha[j], cfg.gates);
    double objective = -mean_loss + cfg.lambda * open_mass / double(n);
    if (!std::isfinite(objective))
      throw error("non-finite selection objective at step " +
                  std::to_string(step));

    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t b = 0; b < bsz; ++b)
        acc += gw[b * n + j] * w[j] * dz[b * n + j];
      double q = prob_nonzero(alpha[j], cfg.gates);
      grad[j] = acc / double(bsz) + cfg.lambda / double(n) * q * (1.0 - q);
    }
    for (std::size_t j = 0; j < n; ++j) {
      vel[j] = cfg.momentum * vel[j] - cfg.lr * grad[j];
      alpha[j] += vel[j];
    }
  }

  std::vector<double> importance(n);
  for (std::size_t j = 0; j < n; ++j) importance[j] = sigmoid(alpha[j]);
  return importance;
}

std::vector<std::uint32_t> select_dominated(const std::vector<double>& importance,
                                            std::size_t phi) {
  if (phi == 0 || phi > importance.size())
    throw error("selection count " + std::to_string(phi) +
                " out of range for " + std::to_string(importance.size()) +
                " weights");
  std::vector<std::uint32_t> order(importance.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return importance[a] > importance[b];
                   });
  order.resize(phi);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<std::vector<std::uint32_t>> partition_by_importance(
    const std::vector<std::uint32_t>& selected,
    const std::vector<double>& importance, std::size_t tiers,
    bool* degenerate) {
  if (tiers == 0) throw error("tier count must be positive");
  if (degenerate) *degenerate = false;
  std::vector<std::vector<std::uint32_t>> out(tiers);
  if (selected.empty()) {
    if (degenerate) *degenerate = tiers > 0;
    return out;
  }

  std::vector<double> vals;
  vals.reserve(selected.size());
  for (std::uint32_t i : selected) {
    if (i >= importance.size())
      throw error("selected index " + std::to_string(i) +
                  " outside the importance map");
    vals.push_back(importance[i]);
  }
  std::sort(vals.begin(), vals.end());

  // Nearest-rank quantile of the selected values at level (tiers-t)/tiers
  // for tier index t (0-based); t = 0 gives the maximum.
  const std::size_t k = vals.size();
  std::vector<double> q(tiers);
  for (std::size_t t = 0; t < tiers; ++t) {
    double level = double(tiers - t) / double(tiers);
    std::size_t rank = std::size_t(std::ceil(level * double(k)));
    rank = std::max<std::size_t>(1, std::min(rank, k));
    q[t] = vals[rank - 1];
  }

  // Equal thresholds collapse upward: each distinct threshold belongs to
  // the highest tier that produced it, and a value joins the tier of the
  // smallest distinct threshold that still covers it.
  std::vector<std::size_t> owner_tier;
  std::vector<double> distinct;
  for (std::size_t t = 0; t < tiers; ++t) {
    if (distinct.empty() || q[t] < distinct.back()) {
      distinct.push_back(q[t]);
      owner_tier.push_back(t);
    }
  }

  for (std::uint32_t i : selected) {
    double p = importance[i];
    std::size_t pos = distinct.size() - 1;
    while (pos > 0 && distinct[pos] < p) --pos;
    out[owner_tier[pos]].push_back(i);
  }
  for (auto& tier : out) std::sort(tier.begin(), tier.end());

  if (degenerate) {
    for (const auto& tier : out)
      if (tier.empty()) *degenerate = true;
  }
  return out;
}

dominated_partition build_partition(const model& m, const dataset& data,
                                    const select_config& cfg) {
  if (cfg.fraction <= 0.0 || cfg.fraction > 1.0)
    throw error("selection fraction must lie in (0, 1]");
  dominated_partition part;
  part.tier_count = cfg.tiers;
  for (std::uint16_t l : m.considered) {
    select_config layer_cfg = cfg;
    layer_cfg.seed = cfg.seed + l;
    layer_partition lp;
    lp.layer = l;
    lp.importance = fit_importance(m, data, l, layer_cfg);
    std::size_t phi = std::size_t(
        std::ceil(cfg.fraction * double(lp.importance.size())));
    phi = std::max<std::size_t>(1, std::min(phi, lp.importance.size()));
    lp.selected = select_dominated(lp.importance, phi);
    bool degenerate = false;
    lp.tiers = partition_by_importance(lp.selected, lp.importance, cfg.tiers,
                                       &degenerate);
    part.degenerate = part.degenerate || degenerate;
    part.layers.push_back(std::move(lp));
  }
  return part;
}

std::vector<location> locate(const dominated_partition& part, std::size_t tier) {
  if (tier == 0 || tier > part.tier_count)
    throw error("tier " + std::to_string(tier) + " out of range");
  std::vector<location> out;
  for (const auto& lp : part.layers)
    for (std::uint32_t i : lp.tiers[tier - 1])
      out.push_back({lp.layer, i});
  return out;
}

}  // namespace senc
