#include "senc/model.hpp"

#include <string>

#include "senc/error.hpp"

namespace senc {

layer make_conv2d(std::uint32_t out_ch, std::uint32_t in_ch, std::uint32_t kernel,
                  std::uint32_t stride, std::uint32_t padding) {
  if (out_ch == 0 || in_ch == 0 || kernel == 0 || stride == 0)
    throw error("conv2d extents and stride must be positive");
  layer l;
  l.kind = layer_kind::conv2d;
  l.shape = {out_ch, in_ch, kernel, kernel};
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  l.weights.assign(static_cast<std::size_t>(out_ch) * in_ch * kernel * kernel, 0.0);
  l.biases.assign(out_ch, 0.0);
  return l;
}

layer make_dense(std::uint32_t out, std::uint32_t in) {
  if (out == 0 || in == 0) throw error("dense extents must be positive");
  layer l;
  l.kind = layer_kind::dense;
  l.shape = {out, in, 1, 1};
  l.weights.assign(static_cast<std::size_t>(out) * in, 0.0);
  l.biases.assign(out, 0.0);
  return l;
}

layer make_relu() {
  layer l;
  l.kind = layer_kind::relu;
  return l;
}

layer make_flatten() {
  layer l;
  l.kind = layer_kind::flatten;
  return l;
}

layer make_softmax() {
  layer l;
  l.kind = layer_kind::softmax;
  return l;
}

void validate_model(const model& m) {
  if (m.layers.empty()) throw error("model has no layers");
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const layer& l = m.layers[i];
    std::size_t expect = 0;
    switch (l.kind) {
      case layer_kind::conv2d:
        expect = static_cast<std::size_t>(l.shape[0]) * l.shape[1] * l.shape[2] * l.shape[3];
        if (l.kernel == 0 || l.stride == 0 || l.shape[2] != l.kernel || l.shape[3] != l.kernel)
          throw error("layer " + std::to_string(i) + ": inconsistent conv geometry");
        if (l.biases.size() != l.shape[0])
          throw error("layer " + std::to_string(i) + ": bias count mismatch");
        break;
      case layer_kind::dense:
        expect = static_cast<std::size_t>(l.shape[0]) * l.shape[1];
        if (l.biases.size() != l.shape[0])
          throw error("layer " + std::to_string(i) + ": bias count mismatch");
        break;
      default:
        if (!l.weights.empty() || !l.biases.empty())
          throw error("layer " + std::to_string(i) + ": parameter-free kind carries parameters");
    }
    if (expect != l.weights.size())
      throw error("layer " + std::to_string(i) + ": weight count mismatch");
  }
  for (std::uint16_t idx : m.considered) {
    if (idx >= m.layers.size() || m.layers[idx].kind != layer_kind::conv2d)
      throw error("considered layer " + std::to_string(idx) + " is not a conv layer");
  }
  for (std::size_t i = 1; i < m.considered.size(); ++i)
    if (m.considered[i] <= m.considered[i - 1])
      throw error("considered layers must be strictly ascending");
}

bool same_geometry(const model& a, const model& b) {
  if (a.task != b.task || a.layers.size() != b.layers.size()) return false;
  if (a.considered != b.considered) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const layer &x = a.layers[i], &y = b.layers[i];
    if (x.kind != y.kind || x.shape != y.shape) return false;
    if (x.kernel != y.kernel || x.stride != y.stride || x.padding != y.padding) return false;
  }
  return true;
}

void validate_dataset(const dataset& d) {
  std::size_t n = d.size();
  if (n == 0) throw error("dataset is empty");
  if (d.inputs.rank() != 4) throw error("dataset inputs must have four extents");
  if (d.task == task_kind::classification) {
    if (d.labels.size() != n) throw error("dataset label count does not match inputs");
  } else {
    if (d.target_dim == 0 || d.targets.size() != n * d.target_dim)
      throw error("dataset target count does not match inputs");
  }
}

}  // namespace senc
