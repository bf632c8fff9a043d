#include "senc/synth.hpp"

#include <cmath>

#include "senc/error.hpp"
#include "senc/rng.hpp"

namespace senc {

namespace {

constexpr std::size_t desk_classes = 10;
constexpr std::size_t desk_modes = 16;
constexpr std::size_t desk_hw = 8;
constexpr double desk_noise = 0.7;
constexpr double desk_template_norm = 8.0;

// Class templates: one fixed draw per (class, variant), every template
// rescaled to a shared norm.
std::vector<double> make_templates(std::uint64_t template_seed) {
  rng gen(template_seed);
  const std::size_t pixels = desk_hw * desk_hw;
  std::vector<double> t(desk_classes * desk_modes * pixels);
  for (std::size_t c = 0; c < desk_classes; ++c) {
    for (std::size_t m = 0; m < desk_modes; ++m) {
      double* base = t.data() + (c * desk_modes + m) * pixels;
      double norm2 = 0.0;
      for (std::size_t p = 0; p < pixels; ++p) {
        base[p] = gen.normal();
        norm2 += base[p] * base[p];
      }
      double scale = desk_template_norm / std::sqrt(norm2);
      for (std::size_t p = 0; p < pixels; ++p) base[p] *= scale;
    }
  }
  return t;
}

dataset templated_dataset(std::size_t n, std::uint64_t seed, std::uint64_t template_seed) {
  if (n == 0) throw error("dataset size must be positive");
  std::vector<double> templates = make_templates(template_seed);
  const std::size_t pixels = desk_hw * desk_hw;

  dataset d;
  d.task = task_kind::classification;
  d.inputs = tensor({n, 1, desk_hw, desk_hw});
  d.labels.resize(n);
  rng gen(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t label = static_cast<std::uint32_t>(i % desk_classes);
    std::size_t mode = static_cast<std::size_t>(gen.below(desk_modes));
    const double* base = templates.data() + (label * desk_modes + mode) * pixels;
    double* x = d.inputs.data() + i * pixels;
    for (std::size_t p = 0; p < pixels; ++p) x[p] = base[p] + desk_noise * gen.normal();
    d.labels[i] = label;
  }
  return d;
}

void he_init(layer& l, rng& gen) {
  double fan_in = 0.0;
  if (l.kind == layer_kind::conv2d)
    fan_in = static_cast<double>(l.shape[1]) * l.shape[2] * l.shape[3];
  else if (l.kind == layer_kind::dense)
    fan_in = static_cast<double>(l.shape[1]);
  else
    return;
  double sigma = std::sqrt(2.0 / fan_in);
  for (auto& w : l.weights) w = gen.normal(0.0, sigma);
}

}  // namespace

dataset make_desk_dataset(std::size_t n, std::uint64_t seed) {
  return templated_dataset(n, seed, 9999);
}

dataset make_surrogate_dataset(std::size_t n, std::uint64_t seed) {
  return templated_dataset(n, seed, 424242);
}

model make_desk_model(std::uint64_t init_seed) {
  model m;
  m.task = task_kind::classification;
  m.layers.push_back(make_conv2d(8, 1, 3, 1, 1));
  m.layers.push_back(make_relu());
  m.layers.push_back(make_conv2d(16, 8, 3, 1, 1));
  m.layers.push_back(make_relu());
  m.layers.push_back(make_flatten());
  m.layers.push_back(make_dense(10, 16 * desk_hw * desk_hw));
  m.layers.push_back(make_softmax());
  m.considered = {0, 2};
  rng gen(init_seed);
  for (auto& l : m.layers) he_init(l, gen);
  validate_model(m);
  return m;
}

dataset make_two_blob_dataset(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw error("dataset size must be positive");
  dataset d;
  d.task = task_kind::classification;
  d.inputs = tensor({n, 1, 2, 2});
  d.labels.resize(n);
  rng gen(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t label = static_cast<std::uint32_t>(i % 2);
    double center = label == 0 ? -1.5 : 1.5;
    double* x = d.inputs.data() + i * 4;
    for (std::size_t p = 0; p < 4; ++p) x[p] = center + gen.normal(0.0, 0.3);
    d.labels[i] = label;
  }
  return d;
}

model make_two_blob_model(std::uint64_t init_seed) {
  model m;
  m.task = task_kind::classification;
  m.layers.push_back(make_flatten());
  m.layers.push_back(make_dense(2, 4));
  m.layers.push_back(make_softmax());
  rng gen(init_seed);
  for (auto& l : m.layers) he_init(l, gen);
  validate_model(m);
  return m;
}

}  // namespace senc
