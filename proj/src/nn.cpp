#include "senc/nn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "senc/error.hpp"
#include "senc/rng.hpp"

namespace senc {

namespace {

using row_mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using map_rm = Eigen::Map<row_mat>;
using cmap_rm = Eigen::Map<const row_mat>;

std::string layer_tag(std::size_t i, const layer& l) {
  static const char* names[] = {"conv2d", "dense", "relu", "flatten", "softmax"};
  return "layer " + std::to_string(i) + " (" + names[static_cast<int>(l.kind)] + ")";
}

struct conv_dims {
  std::size_t in_c, in_h, in_w, out_h, out_w, patch;  // patch = in_c * k * k
};

conv_dims conv_geometry(std::size_t li, const layer& l, const tensor& x) {
  if (x.rank() != 4) throw error(layer_tag(li, l) + ": expected four-extent input");
  conv_dims d;
  d.in_c = x.extent(1);
  d.in_h = x.extent(2);
  d.in_w = x.extent(3);
  if (d.in_c != l.shape[1]) throw error(layer_tag(li, l) + ": input channel mismatch");
  std::size_t k = l.kernel, s = l.stride, p = l.padding;
  if (d.in_h + 2 * p < k || d.in_w + 2 * p < k)
    throw error(layer_tag(li, l) + ": kernel larger than padded input");
  d.out_h = (d.in_h + 2 * p - k) / s + 1;
  d.out_w = (d.in_w + 2 * p - k) / s + 1;
  d.patch = d.in_c * k * k;
  return d;
}

// Unfold one sample into a patch x position matrix (row-major).
void im2col(const double* in, const layer& l, const conv_dims& d, double* col) {
  std::size_t k = l.kernel, s = l.stride, p = l.padding;
  std::size_t positions = d.out_h * d.out_w;
  for (std::size_t c = 0; c < d.in_c; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        double* row = col + ((c * k + ky) * k + kx) * positions;
        for (std::size_t oy = 0; oy < d.out_h; ++oy) {
          std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) - static_cast<std::ptrdiff_t>(p);
          for (std::size_t ox = 0; ox < d.out_w; ++ox) {
            std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) - static_cast<std::ptrdiff_t>(p);
            double v = 0.0;
            if (iy >= 0 && iy < static_cast<std::ptrdiff_t>(d.in_h) && ix >= 0 &&
                ix < static_cast<std::ptrdiff_t>(d.in_w))
              v = in[(c * d.in_h + iy) * d.in_w + ix];
            row[oy * d.out_w + ox] = v;
          }
        }
      }
    }
  }
}

// Scatter-add a patch x position gradient back onto the input sample.
void col2im(const double* col, const layer& l, const conv_dims& d, double* in_grad) {
  std::size_t k = l.kernel, s = l.stride, p = l.padding;
  std::size_t positions = d.out_h * d.out_w;
  for (std::size_t c = 0; c < d.in_c; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const double* row = col + ((c * k + ky) * k + kx) * positions;
        for (std::size_t oy = 0; oy < d.out_h; ++oy) {
          std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) - static_cast<std::ptrdiff_t>(p);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.in_h)) continue;
          for (std::size_t ox = 0; ox < d.out_w; ++ox) {
            std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) - static_cast<std::ptrdiff_t>(p);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.in_w)) continue;
            in_grad[(c * d.in_h + iy) * d.in_w + ix] += row[oy * d.out_w + ox];
          }
        }
      }
    }
  }
}

const double* layer_weights(const layer& l, const weight_override* ov, std::size_t li,
                            std::size_t sample) {
  if (ov && ov->layer == li) return ov->per_sample->data() + sample * l.weights.size();
  return l.weights.data();
}

}  // namespace

tensor forward(const model& m, const tensor& x, forward_cache* cache, const weight_override* ov) {
  if (m.layers.empty()) throw error("model has no layers");
  if (x.rank() < 2) throw error("input batch must carry a leading batch extent");
  std::size_t batch = x.extent(0);
  if (batch == 0) throw error("empty input batch");
  if (ov && (ov->layer >= m.layers.size() || ov->per_sample == nullptr ||
             ov->per_sample->size() != batch * m.layers[ov->layer].weights.size()))
    throw error("weight override does not match model geometry");

  if (cache) {
    cache->acts.clear();
    cache->cols.assign(m.layers.size(), {});
  }

  tensor cur = x;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const layer& l = m.layers[i];
    if (cache) cache->acts.push_back(cur);
    switch (l.kind) {
      case layer_kind::conv2d: {
        conv_dims d = conv_geometry(i, l, cur);
        std::size_t out_c = l.shape[0];
        std::size_t positions = d.out_h * d.out_w;
        tensor out({batch, out_c, d.out_h, d.out_w});
        std::vector<double> scratch;
        std::vector<double>* cols = cache ? &cache->cols[i] : &scratch;
        cols->assign(batch * d.patch * positions, 0.0);
        for (std::size_t b = 0; b < batch; ++b) {
          double* col = cols->data() + b * d.patch * positions;
          im2col(cur.data() + b * d.in_c * d.in_h * d.in_w, l, d, col);
          cmap_rm wmat(layer_weights(l, ov, i, b), out_c, d.patch);
          cmap_rm colm(col, d.patch, positions);
          map_rm outm(out.data() + b * out_c * positions, out_c, positions);
          outm.noalias() = wmat * colm;
          for (std::size_t oc = 0; oc < out_c; ++oc) outm.row(oc).array() += l.biases[oc];
        }
        cur = std::move(out);
        break;
      }
      case layer_kind::dense: {
        if (cur.rank() != 2) throw error(layer_tag(i, l) + ": expected flattened input");
        std::size_t in_n = cur.extent(1), out_n = l.shape[0];
        if (in_n != l.shape[1]) throw error(layer_tag(i, l) + ": input width mismatch");
        tensor out({batch, out_n});
        if (ov && ov->layer == i) {
          for (std::size_t b = 0; b < batch; ++b) {
            cmap_rm wmat(layer_weights(l, ov, i, b), out_n, in_n);
            Eigen::Map<const Eigen::VectorXd> inv(cur.data() + b * in_n, in_n);
            Eigen::Map<Eigen::VectorXd> outv(out.data() + b * out_n, out_n);
            outv.noalias() = wmat * inv;
          }
        } else {
          cmap_rm inm(cur.data(), batch, in_n);
          cmap_rm wmat(l.weights.data(), out_n, in_n);
          map_rm outm(out.data(), batch, out_n);
          outm.noalias() = inm * wmat.transpose();
        }
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t o = 0; o < out_n; ++o) out[b * out_n + o] += l.biases[o];
        cur = std::move(out);
        break;
      }
      case layer_kind::relu: {
        tensor out = cur;
        for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
        cur = std::move(out);
        break;
      }
      case layer_kind::flatten: {
        std::size_t rest = cur.size() / batch;
        cur = cur.reshaped({batch, rest});
        break;
      }
      case layer_kind::softmax: {
        if (cur.rank() != 2) throw error(layer_tag(i, l) + ": expected flattened input");
        std::size_t n = cur.extent(1);
        tensor out({batch, n});
        for (std::size_t b = 0; b < batch; ++b) {
          const double* in = cur.data() + b * n;
          double* o = out.data() + b * n;
          double mx = in[0];
          for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, in[j]);
          double sum = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
          }
          for (std::size_t j = 0; j < n; ++j) o[j] /= sum;
        }
        cur = std::move(out);
        break;
      }
    }
  }
  if (cache) cache->acts.push_back(cur);
  return cur;
}

double loss_eval(const std::vector<double>& output, std::uint32_t target_class, loss_kind k) {
  if (k != loss_kind::cross_entropy) throw error("class targets require cross_entropy");
  if (target_class >= output.size()) throw error("target class out of range");
  double p = std::max(output[target_class], 1e-12);
  return -std::log(p);
}

double loss_eval(const std::vector<double>& output, const std::vector<double>& target,
                 loss_kind k) {
  if (k != loss_kind::mse) throw error("tensor targets require mse");
  if (output.size() != target.size() || output.empty())
    throw error("mse output/target size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < output.size(); ++i) {
    double dlt = output[i] - target[i];
    acc += dlt * dlt;
  }
  return acc / static_cast<double>(output.size());
}

namespace {

// Per-sample loss values and d(loss)/d(output) rows for a batch, no 1/B.
double output_loss_grads(const model& m, const dataset& d, const std::vector<std::size_t>& idx,
                         const tensor& out, tensor& g) {
  std::size_t batch = idx.size();
  std::size_t n = out.extent(1);
  g = tensor({batch, n});
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* o = out.data() + b * n;
    double* gr = g.data() + b * n;
    double sample_loss;
    if (d.task == task_kind::classification) {
      std::uint32_t t = d.labels[idx[b]];
      if (t >= n) throw error("target class out of range");
      double p = std::max(o[t], 1e-12);
      sample_loss = -std::log(p);
      gr[t] = -1.0 / p;
    } else {
      const double* t = d.targets.data() + idx[b] * d.target_dim;
      if (d.target_dim != n) throw error("regression target width mismatch");
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double dlt = o[j] - t[j];
        acc += dlt * dlt;
        gr[j] = 2.0 * dlt / static_cast<double>(n);
      }
      sample_loss = acc / static_cast<double>(n);
    }
    if (!std::isfinite(sample_loss))
      throw error("non-finite loss at batch position " + std::to_string(b));
    total += sample_loss;
  }
  return total / static_cast<double>(batch);
}

tensor gather_batch(const dataset& d, const std::vector<std::size_t>& idx) {
  std::size_t n = d.size();
  std::size_t sample = d.inputs.size() / n;
  std::vector<std::size_t> shape = d.inputs.shape();
  shape[0] = idx.size();
  tensor out(shape);
  for (std::size_t b = 0; b < idx.size(); ++b) {
    if (idx[b] >= n) throw error("batch index out of range");
    std::copy_n(d.inputs.data() + idx[b] * sample, sample, out.data() + b * sample);
  }
  return out;
}

// Reverse pass. mode 0 fills `grads` with summed batch gradients; mode 1
// fills `per_sample` with one weight-gradient row per sample for ov->layer
// and stops once that layer is reached.
void backward(const model& m, const forward_cache& cache, tensor g, const weight_override* ov,
              int mode, std::vector<layer_grads>* grads, std::vector<double>* per_sample) {
  std::size_t batch = g.extent(0);
  for (std::size_t ri = m.layers.size(); ri-- > 0;) {
    const layer& l = m.layers[ri];
    const tensor& in = cache.acts[ri];
    const tensor& out = cache.acts[ri + 1];
    switch (l.kind) {
      case layer_kind::softmax: {
        std::size_t n = out.extent(1);
        tensor gin({batch, n});
        for (std::size_t b = 0; b < batch; ++b) {
          const double* p = out.data() + b * n;
          const double* go = g.data() + b * n;
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j) dot += go[j] * p[j];
          double* gi = gin.data() + b * n;
          for (std::size_t j = 0; j < n; ++j) gi[j] = p[j] * (go[j] - dot);
        }
        g = std::move(gin);
        break;
      }
      case layer_kind::relu: {
        tensor gin = g;
        const auto& iv = in.values();
        for (std::size_t j = 0; j < iv.size(); ++j)
          if (iv[j] <= 0.0) gin[j] = 0.0;
        g = std::move(gin);
        break;
      }
      case layer_kind::flatten: {
        g = g.reshaped(in.shape());
        break;
      }
      case layer_kind::dense: {
        std::size_t in_n = l.shape[1], out_n = l.shape[0];
        bool overridden = ov && ov->layer == ri;
        if (mode == 1 && overridden) {
          for (std::size_t b = 0; b < batch; ++b) {
            cmap_rm go(g.data() + b * out_n, out_n, 1);
            cmap_rm iv(in.data() + b * in_n, 1, in_n);
            map_rm dw(per_sample->data() + b * l.weights.size(), out_n, in_n);
            dw.noalias() = go * iv;
          }
          return;  // nothing below is needed
        }
        if (mode == 0) {
          auto& lg = (*grads)[ri];
          cmap_rm gom(g.data(), batch, out_n);
          cmap_rm inm(in.data(), batch, in_n);
          map_rm dw(lg.weights.data(), out_n, in_n);
          dw.noalias() += gom.transpose() * inm;
          for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t o = 0; o < out_n; ++o) lg.biases[o] += g[b * out_n + o];
        }
        tensor gin({batch, in_n});
        if (overridden) {
          for (std::size_t b = 0; b < batch; ++b) {
            cmap_rm wmat(layer_weights(l, ov, ri, b), out_n, in_n);
            Eigen::Map<const Eigen::VectorXd> go(g.data() + b * out_n, out_n);
            Eigen::Map<Eigen::VectorXd> gi(gin.data() + b * in_n, in_n);
            gi.noalias() = wmat.transpose() * go;
          }
        } else {
          cmap_rm gom(g.data(), batch, out_n);
          cmap_rm wmat(l.weights.data(), out_n, in_n);
          map_rm gim(gin.data(), batch, in_n);
          gim.noalias() = gom * wmat;
        }
        g = std::move(gin);
        break;
      }
      case layer_kind::conv2d: {
        conv_dims ddim = conv_geometry(ri, l, in);
        std::size_t out_c = l.shape[0];
        std::size_t positions = ddim.out_h * ddim.out_w;
        const std::vector<double>& cols = cache.cols[ri];
        if (cols.size() != batch * ddim.patch * positions)
          throw error("backward requires a cached forward pass");
        bool overridden = ov && ov->layer == ri;
        if (mode == 1 && overridden) {
          for (std::size_t b = 0; b < batch; ++b) {
            cmap_rm go(g.data() + b * out_c * positions, out_c, positions);
            cmap_rm col(cols.data() + b * ddim.patch * positions, ddim.patch, positions);
            map_rm dw(per_sample->data() + b * l.weights.size(), out_c, ddim.patch);
            dw.noalias() = go * col.transpose();
          }
          return;
        }
        if (mode == 0) {
          auto& lg = (*grads)[ri];
          map_rm dw(lg.weights.data(), out_c, ddim.patch);
          for (std::size_t b = 0; b < batch; ++b) {
            cmap_rm go(g.data() + b * out_c * positions, out_c, positions);
            cmap_rm col(cols.data() + b * ddim.patch * positions, ddim.patch, positions);
            dw.noalias() += go * col.transpose();
            for (std::size_t oc = 0; oc < out_c; ++oc)
              lg.biases[oc] += go.row(oc).sum();
          }
        }
        if (ri == 0 && mode == 0) {
          // input gradients are never consumed below the first layer
          g = tensor({1});
          break;
        }
        tensor gin(in.shape());
        std::vector<double> colg(ddim.patch * positions);
        for (std::size_t b = 0; b < batch; ++b) {
          cmap_rm go(g.data() + b * out_c * positions, out_c, positions);
          cmap_rm wmat(layer_weights(l, ov, ri, b), out_c, ddim.patch);
          map_rm cg(colg.data(), ddim.patch, positions);
          cg.noalias() = wmat.transpose() * go;
          col2im(colg.data(), l, ddim, gin.data() + b * ddim.in_c * ddim.in_h * ddim.in_w);
        }
        g = std::move(gin);
        break;
      }
    }
  }
}

}  // namespace

double batch_loss_and_grads(const model& m, const dataset& d, const std::vector<std::size_t>& idx,
                            std::vector<layer_grads>& grads) {
  if (idx.empty()) throw error("empty batch");
  grads.assign(m.layers.size(), {});
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    grads[i].weights.assign(m.layers[i].weights.size(), 0.0);
    grads[i].biases.assign(m.layers[i].biases.size(), 0.0);
  }
  forward_cache cache;
  tensor out = forward(m, gather_batch(d, idx), &cache);
  tensor g;
  double mean_loss = output_loss_grads(m, d, idx, out, g);
  backward(m, cache, std::move(g), nullptr, 0, &grads, nullptr);
  double inv_b = 1.0 / static_cast<double>(idx.size());
  for (auto& lg : grads) {
    for (auto& v : lg.weights) v *= inv_b;
    for (auto& v : lg.biases) v *= inv_b;
  }
  return mean_loss;
}

double override_loss_grad(const model& m, const dataset& d, const std::vector<std::size_t>& idx,
                          const weight_override& ov, std::vector<double>& per_sample_grad) {
  if (idx.empty()) throw error("empty batch");
  per_sample_grad.assign(idx.size() * m.layers[ov.layer].weights.size(), 0.0);
  forward_cache cache;
  tensor out = forward(m, gather_batch(d, idx), &cache, &ov);
  tensor g;
  double mean_loss = output_loss_grads(m, d, idx, out, g);
  backward(m, cache, std::move(g), &ov, 1, nullptr, &per_sample_grad);
  return mean_loss;
}

void train_sgd(model& m, const dataset& d, const train_config& cfg, const train_mask* mask) {
  validate_dataset(d);
  if (cfg.lr <= 0.0 || cfg.batch == 0) throw error("train config values must be positive");
  if (mask) {
    if (mask->layer_enabled.size() != m.layers.size() ||
        mask->weight_mask.size() != m.layers.size())
      throw error("train mask does not match model layout");
    for (std::size_t i = 0; i < m.layers.size(); ++i)
      if (!mask->weight_mask[i].empty() && mask->weight_mask[i].size() != m.layers[i].weights.size())
        throw error("train mask does not match model layout");
    if (!mask->bias_enabled.empty() && mask->bias_enabled.size() != m.layers.size())
      throw error("train mask does not match model layout");
  }

  std::vector<layer_grads> vel(m.layers.size());
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    vel[i].weights.assign(m.layers[i].weights.size(), 0.0);
    vel[i].biases.assign(m.layers[i].biases.size(), 0.0);
  }

  rng order(cfg.seed);
  std::size_t n = d.size();
  std::vector<layer_grads> grads;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> perm = order.permutation(n);
    for (std::size_t start = 0; start < n; start += cfg.batch) {
      std::size_t stop = std::min(n, start + cfg.batch);
      std::vector<std::size_t> idx(perm.begin() + start, perm.begin() + stop);
      batch_loss_and_grads(m, d, idx, grads);
      for (std::size_t i = 0; i < m.layers.size(); ++i) {
        if (mask && !mask->layer_enabled[i]) continue;
        layer& l = m.layers[i];
        const std::vector<double>* wm =
            (mask && !mask->weight_mask[i].empty()) ? &mask->weight_mask[i] : nullptr;
        for (std::size_t j = 0; j < l.weights.size(); ++j) {
          double gw = grads[i].weights[j];
          if (wm) gw *= (*wm)[j];
          vel[i].weights[j] = cfg.momentum * vel[i].weights[j] - cfg.lr * gw;
          if (wm) vel[i].weights[j] *= (*wm)[j];
          l.weights[j] += vel[i].weights[j];
        }
        if (mask && !mask->bias_enabled.empty() && !mask->bias_enabled[i]) continue;
        for (std::size_t j = 0; j < l.biases.size(); ++j) {
          vel[i].biases[j] = cfg.momentum * vel[i].biases[j] - cfg.lr * grads[i].biases[j];
          l.biases[j] += vel[i].biases[j];
        }
      }
    }
  }
}

double evaluate(const model& m, const dataset& d) {
  validate_dataset(d);
  std::size_t n = d.size();
  const std::size_t chunk = 256;
  double acc = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += chunk) {
    std::size_t stop = std::min(n, start + chunk);
    idx.clear();
    for (std::size_t i = start; i < stop; ++i) idx.push_back(i);
    tensor out = forward(m, gather_batch(d, idx));
    std::size_t width = out.extent(1);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const double* o = out.data() + b * width;
      if (d.task == task_kind::classification) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < width; ++j)
          if (o[j] > o[best]) best = j;
        if (best == d.labels[idx[b]]) acc += 1.0;
      } else {
        const double* t = d.targets.data() + idx[b] * d.target_dim;
        double mse = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
          double dlt = o[j] - t[j];
          mse += dlt * dlt;
        }
        acc -= mse / static_cast<double>(width);
      }
    }
  }
  return acc / static_cast<double>(n);
}

double dataset_loss(const model& m, const dataset& d) {
  validate_dataset(d);
  std::size_t n = d.size();
  const std::size_t chunk = 256;
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += chunk) {
    std::size_t stop = std::min(n, start + chunk);
    idx.clear();
    for (std::size_t i = start; i < stop; ++i) idx.push_back(i);
    tensor out = forward(m, gather_batch(d, idx));
    std::size_t width = out.extent(1);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const double* o = out.data() + b * width;
      if (d.task == task_kind::classification) {
        double p = std::max(o[d.labels[idx[b]]], 1e-12);
        total += -std::log(p);
      } else {
        const double* t = d.targets.data() + idx[b] * d.target_dim;
        double mse = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
          double dlt = o[j] - t[j];
          mse += dlt * dlt;
        }
        total += mse / static_cast<double>(width);
      }
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace senc
