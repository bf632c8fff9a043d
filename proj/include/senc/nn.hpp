#pragma once

#include <cstdint>
#include <vector>

#include "senc/model.hpp"
#include "senc/tensor.hpp"

namespace senc {

// Activations recorded during a forward pass; acts[i] is the input of
// layer i, acts.back() the network output. Conv layers also keep their
// unfolded input patches for reuse in the backward pass.
struct forward_cache {
  std::vector<tensor> acts;
  std::vector<std::vector<double>> cols;
};

// Per-sample weight substitution for a single conv or dense layer:
// sample b runs with weights[b * count .. (b+1) * count).
struct weight_override {
  std::size_t layer = 0;
  const std::vector<double>* per_sample = nullptr;
};

// Forward pass over a batch laid out (b, c, h, w); single samples pass b=1.
tensor forward(const model& m, const tensor& x, forward_cache* cache = nullptr,
               const weight_override* ov = nullptr);

enum class loss_kind { cross_entropy, mse };

// Conventional positive loss of one output row against one target.
double loss_eval(const std::vector<double>& output, std::uint32_t target_class, loss_kind k);
double loss_eval(const std::vector<double>& output, const std::vector<double>& target, loss_kind k);

struct layer_grads {
  std::vector<double> weights, biases;
};

// Mean loss over the index slice plus gradients of that mean for every
// parameter. Throws on non-finite loss, naming the batch position.
double batch_loss_and_grads(const model& m, const dataset& d, const std::vector<std::size_t>& idx,
                            std::vector<layer_grads>& grads);

// Mean loss over the slice with per-sample effective weights substituted at
// ov.layer; fills d(per-sample loss)/d(effective weights), one row per
// sample, not divided by the batch size.
double override_loss_grad(const model& m, const dataset& d, const std::vector<std::size_t>& idx,
                          const weight_override& ov, std::vector<double>& per_sample_grad);

struct train_config {
  std::size_t epochs = 0;
  double lr = 0.01;
  std::size_t batch = 32;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

// Restricts training to part of the model: layers with enabled=false keep
// their parameters, and a nonempty weight mask zeroes updates (and velocity)
// entrywise at masked-out positions. bias_enabled, when nonempty, freezes
// biases independently of layer_enabled.
struct train_mask {
  std::vector<bool> layer_enabled;
  std::vector<std::vector<double>> weight_mask;
  std::vector<bool> bias_enabled;
};

// In-place SGD with momentum; batch order is a seeded permutation per epoch.
void train_sgd(model& m, const dataset& d, const train_config& cfg,
               const train_mask* mask = nullptr);

// Classification: accuracy fraction (argmax, ties to the lowest index).
// Regression: mean negative MSE, so higher is better for both tasks.
double evaluate(const model& m, const dataset& d);

// Mean loss over a whole dataset without gradients.
double dataset_loss(const model& m, const dataset& d);

}  // namespace senc
