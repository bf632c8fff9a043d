#include "senc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "senc/error.hpp"
#include "senc/nn.hpp"
#include "senc/permission.hpp"
#include "senc/rng.hpp"

namespace senc {

namespace {

// Survival function of the Kolmogorov distribution, piecewise between the
// theta-function form (small z) and the alternating series (large z).
double kolmogorov_q(double z) {
  double u = std::abs(z);
  if (u < 0.2) return 1.0;
  if (u < 0.755) {
    const double w = 2.50662827463100050242;  // sqrt(2*pi)
    const double c1 = -1.2337005501361697;    // -pi^2/8
    double v = 1.0 / (u * u);
    return 1.0 -
           w * (std::exp(c1 * v) + std::exp(9.0 * c1 * v) +
                std::exp(25.0 * c1 * v)) /
               u;
  }
  if (u < 6.8116) {
    double v = u * u;
    double p = 0.0;
    int terms = std::max(1, int(std::lround(3.0 / u)));
    for (int j = 0; j <= terms; ++j) {
      double sign = (j % 2) ? -1.0 : 1.0;
      p += sign * std::exp(-2.0 * double(j + 1) * double(j + 1) * v);
    }
    return std::min(1.0, std::max(0.0, 2.0 * p));
  }
  return 0.0;
}

double binned_entropy(const std::vector<std::size_t>& counts, std::size_t n) {
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    double p = double(c) / double(n);
    h -= p * std::log(p);
  }
  return h;
}

std::size_t bin_of(double x, double lo, double hi, std::size_t bins) {
  if (!(hi > lo)) return 0;
  double t = (x - lo) / (hi - lo);
  auto b = std::size_t(t * double(bins));
  return std::min(b, bins - 1);
}

std::vector<std::uint32_t> strategy_selection(selection_strategy s,
                                              const std::vector<double>& w,
                                              const std::vector<double>& importance,
                                              std::size_t phi, rng& gen) {
  std::vector<std::uint32_t> order(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) order[i] = std::uint32_t(i);
  switch (s) {
    case selection_strategy::pss:
      return select_dominated(importance, phi);
    case selection_strategy::random: {
      std::vector<std::size_t> pick = gen.choice(w.size(), phi);
      std::vector<std::uint32_t> out(pick.begin(), pick.end());
      std::sort(out.begin(), out.end());
      return out;
    }
    case selection_strategy::mean: {
      double mu = 0.0;
      for (double v : w) mu += v;
      mu /= double(w.size());
      std::stable_sort(order.begin(), order.end(),
                       [&](std::uint32_t a, std::uint32_t b) {
                         return std::abs(w[a] - mu) < std::abs(w[b] - mu);
                       });
      break;
    }
    case selection_strategy::descending:
      std::stable_sort(order.begin(), order.end(),
                       [&](std::uint32_t a, std::uint32_t b) {
                         return w[a] > w[b];
                       });
      break;
    case selection_strategy::ascending:
      std::stable_sort(order.begin(), order.end(),
                       [&](std::uint32_t a, std::uint32_t b) {
                         return w[a] < w[b];
                       });
      break;
  }
  order.resize(phi);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

ks_result ks_two_sample(const std::vector<double>& a,
                        const std::vector<double>& b) {
  if (a.size() < 8 || b.size() < 8)
    throw error("KS test needs at least 8 points per sample");
  std::vector<double> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  const double na = double(sa.size()), nb = double(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(double(i) / na - double(j) / nb));
  }
  d = std::max(d, std::abs(1.0 - double(j) / nb));
  d = std::max(d, std::abs(double(i) / na - 1.0));

  double ne = na * nb / (na + nb);
  ks_result r;
  r.d = d;
  r.p = kolmogorov_q(std::sqrt(ne) * d);
  return r;
}

double binned_mi(const std::vector<double>& x, const std::vector<double>& y,
                 std::size_t bins, double* h_first) {
  if (x.size() != y.size()) throw error("paired samples differ in length");
  if (x.empty()) throw error("empty sample");
  if (bins < 2) throw error("need at least 2 bins");
  const std::size_t n = x.size();
  auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
  auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
  std::vector<std::size_t> joint(bins * bins, 0), mx(bins, 0), my(bins, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t bx = bin_of(x[i], *xmin_it, *xmax_it, bins);
    std::size_t by = bin_of(y[i], *ymin_it, *ymax_it, bins);
    ++joint[bx * bins + by];
    ++mx[bx];
    ++my[by];
  }
  double hx = binned_entropy(mx, n);
  double mi = hx + binned_entropy(my, n) - binned_entropy(joint, n);
  if (h_first) *h_first = hx;
  return std::max(mi, 0.0);
}

imperceptibility imperceptibility_report(const model& protected_model,
                                         const cipher_bundle& bundle) {
  validate_model(protected_model);
  const std::size_t slots = protected_model.considered.size();
  if (bundle.stats.size() != slots)
    throw error("bundle does not match the model");

  model original = protected_model;
  if (!bundle.tiers.empty())
    original = decrypt_with_permission(
        protected_model,
        assign_permission(bundle, std::uint8_t(bundle.tiers.size())),
        bundle.rho);

  imperceptibility rep;
  for (std::size_t s = 0; s < slots; ++s) {
    std::uint16_t l = protected_model.considered[s];
    std::set<std::uint32_t> located;
    for (const auto& tc : bundle.tiers)
      for (std::uint32_t i : tc.indices[s]) located.insert(i);
    if (located.empty()) continue;

    const std::vector<double>& pw = protected_model.layers[l].weights;
    const std::vector<double>& ow = original.layers[l].weights;
    layer_imperceptibility row;
    row.layer = l;
    row.cipher_count = located.size();
    row.plain_count = pw.size() - located.size();

    std::vector<double> cipher, plain, mask;
    cipher.reserve(located.size());
    mask.reserve(located.size());
    plain.reserve(row.plain_count);
    for (std::size_t i = 0; i < pw.size(); ++i) {
      if (located.count(std::uint32_t(i))) {
        cipher.push_back(pw[i]);
        mask.push_back(pw[i] - ow[i]);
      } else {
        plain.push_back(pw[i]);
      }
    }

    if (cipher.size() < 8 || plain.size() < 8) {
      row.skipped = true;
      rep.layers.push_back(row);
      continue;
    }

    ks_result ks = ks_two_sample(cipher, plain);
    row.d = ks.d;
    row.p = ks.p;
    row.ks_pass = ks.p >= 0.01;

    const std::size_t bins = 64;
    double hx = 0.0;
    double mi = binned_mi(mask, cipher, bins, &hx);
    row.mi = hx > 0.0 ? mi / hx : 0.0;
    row.mi_bias = double((bins - 1) * (bins - 1)) / (2.0 * double(mask.size()));
    rep.layers.push_back(row);
  }
  return rep;
}

const char* strategy_name(selection_strategy s) {
  switch (s) {
    case selection_strategy::pss: return "pss";
    case selection_strategy::random: return "random";
    case selection_strategy::mean: return "mean";
    case selection_strategy::descending: return "descending";
    case selection_strategy::ascending: return "ascending";
  }
  return "?";
}

std::vector<curve_row> degradation_curve(
    const model& m, const dataset& fit_data, const dataset& eval_data,
    const std::vector<selection_strategy>& strategies,
    std::vector<double> fractions, const curve_config& cfg) {
  validate_model(m);
  if (cfg.trials < 1) throw error("curve needs at least one trial");
  for (double f : fractions)
    if (f < 0.0 || f > 1.0) throw error("fractions must lie in [0, 1]");
  std::sort(fractions.begin(), fractions.end());

  bool want_pss = std::find(strategies.begin(), strategies.end(),
                            selection_strategy::pss) != strategies.end();
  std::vector<std::vector<double>> importance(m.considered.size());
  if (want_pss) {
    for (std::size_t s = 0; s < m.considered.size(); ++s) {
      select_config sel = cfg.sel;
      sel.seed = cfg.sel.seed + m.considered[s];
      importance[s] = fit_importance(m, fit_data, m.considered[s], sel);
    }
  }

  double intact = evaluate(m, eval_data);

  std::vector<curve_row> rows;
  std::uint64_t cell = 0;
  for (selection_strategy strat : strategies) {
    for (double f : fractions) {
      ++cell;
      curve_row row;
      row.strategy = strat;
      row.fraction = f;
      if (f == 0.0) {
        row.mean_score = intact;
        row.std_score = 0.0;
        rows.push_back(row);
        continue;
      }

      std::vector<double> scores;
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        rng pick(cfg.seed + 1000003ull * cell + t);
        dominated_partition part;
        part.tier_count = 1;
        for (std::size_t s = 0; s < m.considered.size(); ++s) {
          const std::vector<double>& w = m.layers[m.considered[s]].weights;
          std::size_t phi = std::max<std::size_t>(
              1, std::size_t(std::ceil(f * double(w.size()))));
          phi = std::min(phi, w.size());
          layer_partition lp;
          lp.layer = m.considered[s];
          lp.selected = strategy_selection(strat, w, importance[s], phi, pick);
          lp.tiers.push_back(lp.selected);
          part.layers.push_back(std::move(lp));
        }
        auto keys = tier_keys(cfg.seed + 7919ull * cell + t, 1);
        auto [prot, bundle] = encrypt_model(m, part, keys, cfg.rho);
        scores.push_back(evaluate(prot, eval_data));
      }

      double mean = 0.0;
      for (double v : scores) mean += v;
      mean /= double(scores.size());
      double var = 0.0;
      for (double v : scores) var += (v - mean) * (v - mean);
      row.mean_score = mean;
      row.std_score =
          scores.size() > 1 ? std::sqrt(var / double(scores.size() - 1)) : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<double> hierarchy_table(const model& protected_model,
                                    const cipher_bundle& bundle,
                                    const dataset& eval_data) {
  std::vector<double> scores;
  scores.push_back(evaluate(protected_model, eval_data));
  for (std::size_t level = 1; level <= bundle.tiers.size(); ++level) {
    model dec = decrypt_with_permission(
        protected_model, assign_permission(bundle, std::uint8_t(level)),
        bundle.rho);
    scores.push_back(evaluate(dec, eval_data));
  }
  return scores;
}

}  // namespace senc
