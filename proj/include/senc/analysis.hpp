#pragma once

#include <cstdint>
#include <vector>

#include "senc/dprm.hpp"
#include "senc/model.hpp"
#include "senc/pss.hpp"

namespace senc {

struct ks_result {
  double d = 0.0;
  double p = 1.0;
};

// Two-sample Kolmogorov-Smirnov test; p from the asymptotic Kolmogorov
// distribution at sqrt(n_eff)*D with n_eff = |a||b|/(|a|+|b|).
ks_result ks_two_sample(const std::vector<double>& a,
                        const std::vector<double>& b);

// Plug-in mutual information between two paired samples over a bins x bins
// equal-width grid, in nats. The plug-in estimate biases upward by roughly
// (bins-1)^2/(2n) nats. h_first, when given, receives the binned marginal
// entropy of x.
double binned_mi(const std::vector<double>& x, const std::vector<double>& y,
                 std::size_t bins, double* h_first = nullptr);

struct layer_imperceptibility {
  std::uint16_t layer = 0;
  std::size_t cipher_count = 0;
  std::size_t plain_count = 0;
  bool skipped = false;  // too few ciphertext values to test
  double d = 0.0;
  double p = 1.0;
  bool ks_pass = false;  // p >= 0.01
  double mi = 0.0;       // binned MI(mask, cipher) / binned H(mask)
  double mi_bias = 0.0;  // estimator bias (bins-1)^2 / (2 n) in nats
};

struct imperceptibility {
  std::vector<layer_imperceptibility> layers;
};

// Per considered layer with any ciphertext: KS between the layer's
// ciphertext and its non-selected plaintext, and the normalized binned
// mutual information between the effective mask (cipher minus original,
// recovered through the bundle) and the ciphertext. Layers with fewer
// than 8 ciphertext values are flagged skipped.
imperceptibility imperceptibility_report(const model& protected_model,
                                         const cipher_bundle& bundle);

enum class selection_strategy { pss, random, mean, descending, ascending };

const char* strategy_name(selection_strategy s);

struct curve_row {
  selection_strategy strategy{};
  double fraction = 0.0;
  double mean_score = 0.0;
  double std_score = 0.0;
};

struct curve_config {
  select_config sel;  // importance fitting for the pss strategy
  double rho = 8.0;
  std::size_t trials = 20;
  std::uint64_t seed = 0;
};

// Score after encrypting a fraction of each considered layer, selected per
// strategy, averaged over trials (fresh keys each trial; the random
// strategy also redraws its selection). Fraction 0 rows score the intact
// model. Rows are ordered strategy-major, fractions ascending.
std::vector<curve_row> degradation_curve(
    const model& m, const dataset& fit_data, const dataset& eval_data,
    const std::vector<selection_strategy>& strategies,
    std::vector<double> fractions, const curve_config& cfg);

// Scores at permission levels 0..M; level 0 is the protected model as-is.
std::vector<double> hierarchy_table(const model& protected_model,
                                    const cipher_bundle& bundle,
                                    const dataset& eval_data);

}  // namespace senc
