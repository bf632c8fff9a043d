#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "senc/tensor.hpp"

namespace senc {

enum class layer_kind : std::uint8_t {
  conv2d = 0,
  dense = 1,
  relu = 2,
  flatten = 3,
  softmax = 4,
};

enum class task_kind : std::uint8_t {
  classification = 0,
  regression = 1,
};

struct layer {
  layer_kind kind{};
  // Weight extents: conv2d (out_ch, in_ch, k, k), dense (out, in, 1, 1),
  // all zero for parameter-free kinds.
  std::array<std::uint32_t, 4> shape{};
  std::uint32_t kernel = 0, stride = 0, padding = 0;
  std::vector<double> weights;
  std::vector<double> biases;
};

struct model {
  task_kind task = task_kind::classification;
  std::vector<layer> layers;
  // Indices of the conv layers eligible for protection, ascending.
  std::vector<std::uint16_t> considered;
};

layer make_conv2d(std::uint32_t out_ch, std::uint32_t in_ch, std::uint32_t kernel,
                  std::uint32_t stride, std::uint32_t padding);
layer make_dense(std::uint32_t out, std::uint32_t in);
layer make_relu();
layer make_flatten();
layer make_softmax();

// Validates layer wiring and the considered list; throws on violations.
void validate_model(const model& m);

// Same kinds, shapes, and conv geometry (weights may differ).
bool same_geometry(const model& a, const model& b);

struct dataset {
  task_kind task = task_kind::classification;
  tensor inputs;                       // (n, channels, height, width)
  std::vector<std::uint32_t> labels;   // classification targets
  std::vector<double> targets;         // regression targets, row-major n x target_dim
  std::size_t target_dim = 0;

  std::size_t size() const { return inputs.empty() ? 0 : inputs.extent(0); }
};

void validate_dataset(const dataset& d);

}  // namespace senc
