#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "senc/model.hpp"
#include "senc/nn.hpp"
#include "senc/pss.hpp"

namespace senc {

enum class wavelet_kind { haar, db2 };
enum class filter_kind { average, gaussian, median };
enum class threshold_rule { universal };

// One analysis step of the periodized orthogonal DWT: even-length input,
// returns (approximation, detail) halves.
std::pair<std::vector<double>, std::vector<double>> dwt_step(
    const std::vector<double>& x, wavelet_kind w);
std::vector<double> idwt_step(const std::vector<double>& approx,
                              const std::vector<double>& detail,
                              wavelet_kind w);

double soft_threshold(double x, double t);

// Multi-level denoise of one signal: pad to the next power of two by edge
// replication, decompose, soft-threshold every detail level with the
// universal threshold sigma*sqrt(2 ln n) (sigma from the finest detail's
// median absolute value), reconstruct, crop.
std::vector<double> wavelet_denoise(const std::vector<double>& x,
                                    wavelet_kind w, std::size_t levels,
                                    threshold_rule rule);

// Denoising attacks over each considered layer's flattened weights; biases
// and non-considered layers are untouched.
model wavelet_attack(const model& m, wavelet_kind w, std::size_t levels = 3,
                     threshold_rule rule = threshold_rule::universal);
model filter_attack(const model& m, filter_kind k, std::size_t window = 3);

// Seeded sample of a fraction of the training set; the attacker's corpus.
dataset attacker_slice(const dataset& train, double fraction,
                       std::uint64_t seed);

// Each considered layer is unfrozen alone (weights and biases) and trained
// on the attacker's data; changes accumulate across layers.
model layerwise_retrain(const model& m, const dataset& attacker_data,
                        const train_config& tc);

// Importance is fitted on a surrogate of identical architecture, and the
// protected model is retrained only at the surrogate's dominated weight
// positions; biases stay frozen.
model transfer_retrain(const model& m, const dataset& attacker_data,
                       const model& surrogate, const dataset& surrogate_data,
                       const select_config& sel, const train_config& tc);

struct attack_report {
  double attacked = 0.0;
  double baseline = 0.0;
  double goal = 0.0;
  bool success = false;  // attacked >= goal, boundary inclusive
};

attack_report evaluate_attack(const model& attacked, const dataset& d,
                              double goal, double baseline);

}  // namespace senc
