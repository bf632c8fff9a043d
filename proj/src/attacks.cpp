#include "senc/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "senc/error.hpp"
#include "senc/rng.hpp"

namespace senc {

namespace {

const double kInvSqrt2 = 0.7071067811865475244;

std::vector<double> lowpass(wavelet_kind w) {
  if (w == wavelet_kind::haar) return {kInvSqrt2, kInvSqrt2};
  const double s3 = std::sqrt(3.0);
  const double n = 4.0 * std::sqrt(2.0);
  return {(1.0 + s3) / n, (3.0 + s3) / n, (3.0 - s3) / n, (1.0 - s3) / n};
}

std::vector<double> highpass(const std::vector<double>& h) {
  std::vector<double> g(h.size());
  for (std::size_t k = 0; k < h.size(); ++k)
    g[k] = (k % 2 ? -1.0 : 1.0) * h[h.size() - 1 - k];
  return g;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> dwt_step(
    const std::vector<double>& x, wavelet_kind w) {
  std::vector<double> h = lowpass(w), g = highpass(h);
  const std::size_t n = x.size();
  if (n < h.size())
    throw error("signal of length " + std::to_string(n) +
                " is shorter than the wavelet filter");
  if (n % 2) throw error("signal length must be even");
  std::vector<double> a(n / 2, 0.0), d(n / 2, 0.0);
  for (std::size_t k = 0; k < n / 2; ++k) {
    for (std::size_t m = 0; m < h.size(); ++m) {
      double v = x[(2 * k + m) % n];
      a[k] += h[m] * v;
      d[k] += g[m] * v;
    }
  }
  return {std::move(a), std::move(d)};
}

std::vector<double> idwt_step(const std::vector<double>& approx,
                              const std::vector<double>& detail,
                              wavelet_kind w) {
  if (approx.size() != detail.size())
    throw error("approximation and detail lengths differ");
  std::vector<double> h = lowpass(w), g = highpass(h);
  const std::size_t n = 2 * approx.size();
  std::vector<double> x(n, 0.0);
  for (std::size_t k = 0; k < approx.size(); ++k)
    for (std::size_t m = 0; m < h.size(); ++m)
      x[(2 * k + m) % n] += h[m] * approx[k] + g[m] * detail[k];
  return x;
}

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

std::vector<double> wavelet_denoise(const std::vector<double>& x,
                                    wavelet_kind w, std::size_t levels,
                                    threshold_rule rule) {
  (void)rule;  // universal is the only rule
  const std::size_t taps = lowpass(w).size();
  if (x.size() < taps)
    throw error("signal of length " + std::to_string(x.size()) +
                " is shorter than the wavelet filter");
  if (levels == 0) return x;

  std::size_t n = 1;
  while (n < x.size()) n *= 2;
  std::vector<double> padded = x;
  padded.resize(n, x.back());

  std::vector<std::vector<double>> details;
  std::vector<double> approx = std::move(padded);
  for (std::size_t l = 0;
       l < levels && approx.size() >= taps && approx.size() % 2 == 0; ++l) {
    auto [a, d] = dwt_step(approx, w);
    details.push_back(std::move(d));
    approx = std::move(a);
  }
  if (details.empty()) return x;

  std::vector<double> abs_d1(details.front().size());
  for (std::size_t i = 0; i < abs_d1.size(); ++i)
    abs_d1[i] = std::abs(details.front()[i]);
  double sigma = median_of(abs_d1) / 0.6745;
  double t = sigma * std::sqrt(2.0 * std::log(double(n)));

  for (auto& d : details)
    for (double& c : d) c = soft_threshold(c, t);

  for (std::size_t l = details.size(); l-- > 0;)
    approx = idwt_step(approx, details[l], w);
  approx.resize(x.size());
  return approx;
}

model wavelet_attack(const model& m, wavelet_kind w, std::size_t levels,
                     threshold_rule rule) {
  model out = m;
  for (std::uint16_t l : m.considered)
    out.layers[l].weights =
        wavelet_denoise(m.layers[l].weights, w, levels, rule);
  return out;
}

model filter_attack(const model& m, filter_kind k, std::size_t window) {
  if (window < 3 || window % 2 == 0)
    throw error("filter window must be odd and at least 3");
  const std::size_t r = window / 2;

  std::vector<double> kernel;
  if (k == filter_kind::gaussian) {
    double sigma = double(window) / 6.0;
    double sum = 0.0;
    kernel.resize(window);
    for (std::size_t j = 0; j < window; ++j) {
      double z = (double(j) - double(r)) / sigma;
      kernel[j] = std::exp(-0.5 * z * z);
      sum += kernel[j];
    }
    for (double& c : kernel) c /= sum;
  }

  model out = m;
  for (std::uint16_t l : m.considered) {
    const std::vector<double>& x = m.layers[l].weights;
    std::vector<double>& y = out.layers[l].weights;
    const std::ptrdiff_t n = std::ptrdiff_t(x.size());
    auto at = [&](std::ptrdiff_t i) {
      return x[std::size_t(std::clamp<std::ptrdiff_t>(i, 0, n - 1))];
    };
    std::vector<double> win(window);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      switch (k) {
        case filter_kind::average: {
          double s = 0.0;
          for (std::size_t j = 0; j < window; ++j)
            s += at(i + std::ptrdiff_t(j) - std::ptrdiff_t(r));
          y[std::size_t(i)] = s / double(window);
          break;
        }
        case filter_kind::gaussian: {
          double s = 0.0;
          for (std::size_t j = 0; j < window; ++j)
            s += kernel[j] * at(i + std::ptrdiff_t(j) - std::ptrdiff_t(r));
          y[std::size_t(i)] = s;
          break;
        }
        case filter_kind::median: {
          for (std::size_t j = 0; j < window; ++j)
            win[j] = at(i + std::ptrdiff_t(j) - std::ptrdiff_t(r));
          y[std::size_t(i)] = median_of(win);
          break;
        }
      }
    }
  }
  return out;
}

dataset attacker_slice(const dataset& train, double fraction,
                       std::uint64_t seed) {
  validate_dataset(train);
  if (train.size() == 0) throw error("empty attacker dataset");
  if (fraction <= 0.0 || fraction > 1.0)
    throw error("data fraction must lie in (0, 1]");
  std::size_t count = std::max<std::size_t>(
      1, std::size_t(std::ceil(fraction * double(train.size()))));

  rng gen(seed);
  std::vector<std::size_t> pick = gen.choice(train.size(), count);

  dataset out;
  out.task = train.task;
  out.target_dim = train.target_dim;
  const std::size_t row = train.inputs.values().size() / train.size();
  std::vector<std::size_t> shape{count, train.inputs.extent(1),
                                 train.inputs.extent(2),
                                 train.inputs.extent(3)};
  out.inputs = tensor(shape);
  for (std::size_t i = 0; i < count; ++i) {
    const double* src = train.inputs.data() + pick[i] * row;
    std::copy(src, src + row, out.inputs.data() + i * row);
    if (train.task == task_kind::classification) {
      out.labels.push_back(train.labels[pick[i]]);
    } else {
      for (std::size_t j = 0; j < train.target_dim; ++j)
        out.targets.push_back(train.targets[pick[i] * train.target_dim + j]);
    }
  }
  return out;
}

model layerwise_retrain(const model& m, const dataset& attacker_data,
                        const train_config& tc) {
  validate_dataset(attacker_data);
  if (attacker_data.size() == 0) throw error("empty attacker dataset");
  model out = m;
  for (std::uint16_t target : m.considered) {
    train_mask mask;
    mask.layer_enabled.assign(m.layers.size(), false);
    mask.layer_enabled[target] = true;
    mask.weight_mask.resize(m.layers.size());
    train_sgd(out, attacker_data, tc, &mask);
  }
  return out;
}

model transfer_retrain(const model& m, const dataset& attacker_data,
                       const model& surrogate, const dataset& surrogate_data,
                       const select_config& sel, const train_config& tc) {
  validate_dataset(attacker_data);
  if (attacker_data.size() == 0) throw error("empty attacker dataset");
  if (!same_geometry(m, surrogate))
    throw error("surrogate architecture does not match the target");

  dominated_partition part = build_partition(surrogate, surrogate_data, sel);

  train_mask mask;
  mask.layer_enabled.assign(m.layers.size(), false);
  mask.weight_mask.resize(m.layers.size());
  mask.bias_enabled.assign(m.layers.size(), false);
  for (const auto& lp : part.layers) {
    mask.layer_enabled[lp.layer] = true;
    mask.weight_mask[lp.layer].assign(m.layers[lp.layer].weights.size(), 0.0);
    for (std::uint32_t i : lp.selected) mask.weight_mask[lp.layer][i] = 1.0;
  }

  model out = m;
  train_sgd(out, attacker_data, tc, &mask);
  return out;
}

attack_report evaluate_attack(const model& attacked, const dataset& d,
                              double goal, double baseline) {
  attack_report r;
  r.attacked = evaluate(attacked, d);
  r.baseline = baseline;
  r.goal = goal;
  r.success = r.attacked >= goal;
  return r;
}

}  // namespace senc
