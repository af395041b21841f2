/*
 * Copyright 2026 The DSFFS Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sparse_net.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>

namespace dsffs {

namespace {

std::atomic<std::uint64_t> g_version_counter{0};

std::uint64_t next_version() { return ++g_version_counter; }

}  // namespace

//-----------------------------------------------------------------------
//   SparseLayer
//-----------------------------------------------------------------------

SparseLayer::SparseLayer(std::size_t rows, std::size_t cols, bool use_bias)
    : rows_(rows),
      cols_(cols),
      use_bias_(use_bias),
      weights_(rows * cols, 0.0),
      mask_(rows * cols, 0),
      bias_(use_bias ? cols : 0, 0.0) {}

void SparseLayer::activate(std::size_t idx, double value) {
  mask_.at(idx) = 1;
  weights_[idx] = value;
}

void SparseLayer::deactivate(std::size_t idx) {
  mask_.at(idx) = 0;
  weights_[idx] = 0.0;
}

void SparseLayer::set_weight(std::size_t idx, double value) {
  if (!mask_.at(idx)) {
    throw std::logic_error("set_weight on inactive connection " +
                           std::to_string(idx));
  }
  weights_[idx] = value;
}

std::size_t SparseLayer::nnz() const {
  return static_cast<std::size_t>(
      std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

std::size_t SparseLayer::row_nnz(std::size_t i) const {
  const auto* row = mask_.data() + i * cols_;
  return static_cast<std::size_t>(std::count(row, row + cols_, std::uint8_t{1}));
}

std::size_t SparseLayer::col_nnz(std::size_t j) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < rows_; ++i) n += mask_[i * cols_ + j];
  return n;
}

bool SparseLayer::consistent() const {
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (!mask_[k] && weights_[k] != 0.0) return false;
  }
  return true;
}

//-----------------------------------------------------------------------
//   SparseNetwork
//-----------------------------------------------------------------------

SparseNetwork::SparseNetwork(std::vector<SparseLayer> layers, double sparsity,
                             Activation activation)
    : layers_(std::move(layers)),
      sparsity_(sparsity),
      activation_(activation),
      version_(next_version()) {
  if (layers_.empty()) throw std::invalid_argument("network without layers");
  for (std::size_t l = 1; l < layers_.size(); ++l) {
    if (layers_[l].rows() != layers_[l - 1].cols()) {
      throw std::invalid_argument("layer " + std::to_string(l) +
                                  " fan-in does not match previous fan-out");
    }
  }
}

std::vector<std::size_t> SparseNetwork::dims() const {
  std::vector<std::size_t> d;
  d.reserve(layers_.size() + 1);
  d.push_back(layers_.front().rows());
  for (const auto& layer : layers_) d.push_back(layer.cols());
  return d;
}

std::vector<double> SparseNetwork::layer_densities() const {
  std::vector<double> out;
  for (const auto& layer : layers_) {
    out.push_back(static_cast<double>(layer.nnz()) /
                  static_cast<double>(layer.size()));
  }
  return out;
}

std::size_t SparseNetwork::nnz() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.nnz();
  return n;
}

std::vector<std::size_t> SparseNetwork::layer_nnz() const {
  std::vector<std::size_t> out;
  for (const auto& layer : layers_) out.push_back(layer.nnz());
  return out;
}

std::size_t SparseNetwork::dense_size() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.size();
  return n;
}

void SparseNetwork::touch() { version_ = next_version(); }

//-----------------------------------------------------------------------
//   Initialization
//-----------------------------------------------------------------------

std::vector<std::size_t> er_layer_nnz(std::span<const std::size_t> dims,
                                      double sparsity) {
  if (dims.size() < 2) throw ConfigError("need at least two layer dimensions");
  if (!(sparsity >= 0.0 && sparsity < 1.0)) {
    throw ConfigError("sparsity must lie in [0, 1), got " +
                      std::to_string(sparsity));
  }
  for (std::size_t d : dims) {
    if (d == 0) throw ConfigError("layer dimension must be positive");
  }
  const std::size_t num_layers = dims.size() - 1;
  std::vector<double> size(num_layers), perimeter(num_layers);
  double total = 0.0;
  for (std::size_t l = 0; l < num_layers; ++l) {
    size[l] = static_cast<double>(dims[l]) * static_cast<double>(dims[l + 1]);
    perimeter[l] = static_cast<double>(dims[l] + dims[l + 1]);
    total += size[l];
  }
  const double target = (1.0 - sparsity) * total;

  std::vector<bool> saturated(num_layers, false);
  std::vector<double> density(num_layers, 1.0);
  for (;;) {
    double fixed = 0.0, denom = 0.0;
    for (std::size_t l = 0; l < num_layers; ++l) {
      if (saturated[l]) {
        fixed += size[l];
      } else {
        denom += perimeter[l];
      }
    }
    if (denom == 0.0) break;
    const double eps = (target - fixed) / denom;
    bool changed = false;
    for (std::size_t l = 0; l < num_layers; ++l) {
      if (saturated[l]) continue;
      density[l] = eps * perimeter[l] / size[l];
      if (density[l] >= 1.0) {
        saturated[l] = true;
        density[l] = 1.0;
        changed = true;
      }
    }
    if (!changed) break;
  }

  std::vector<std::size_t> nnz(num_layers);
  for (std::size_t l = 0; l < num_layers; ++l) {
    nnz[l] = saturated[l] ? static_cast<std::size_t>(size[l])
                          : static_cast<std::size_t>(
                                std::llround(density[l] * size[l]));
  }
  return nnz;
}

SparseNetwork init_er_topology(std::span<const std::size_t> dims,
                               double sparsity, std::uint64_t seed,
                               const InitOptions& options) {
  const auto targets = er_layer_nnz(dims, sparsity);
  Rng rng = make_rng(seed, 0x1417);

  std::vector<SparseLayer> layers;
  for (std::size_t l = 0; l < targets.size(); ++l) {
    const std::size_t rows = dims[l];
    const std::size_t cols = dims[l + 1];
    const std::size_t nnz = targets[l];
    if (nnz < cols) {
      throw ConfigError("sparsity " + std::to_string(sparsity) +
                        " leaves layer " + std::to_string(l) + " with " +
                        std::to_string(nnz) + " connections for " +
                        std::to_string(cols) + " output neurons");
    }
    if (l == 0 && nnz < rows) {
      throw ConfigError("sparsity " + std::to_string(sparsity) +
                        " leaves the input layer with " + std::to_string(nnz) +
                        " connections for " + std::to_string(rows) +
                        " features");
    }
    SparseLayer layer(rows, cols, options.use_bias);

    // Cover every column (and as many rows as the budget allows) with one
    // connection each, then fill uniformly at random.
    std::vector<std::size_t> row_perm(rows), col_perm(cols);
    std::iota(row_perm.begin(), row_perm.end(), 0);
    std::iota(col_perm.begin(), col_perm.end(), 0);
    std::shuffle(row_perm.begin(), row_perm.end(), rng);
    std::shuffle(col_perm.begin(), col_perm.end(), rng);
    const std::size_t cover = std::min(nnz, std::max(rows, cols));
    for (std::size_t k = 0; k < cover; ++k) {
      layer.activate(layer.index(row_perm[k % rows], col_perm[k % cols]));
    }
    std::vector<std::size_t> free_slots;
    free_slots.reserve(layer.size() - cover);
    for (std::size_t idx = 0; idx < layer.size(); ++idx) {
      if (!layer.active(idx)) free_slots.push_back(idx);
    }
    const std::size_t fill = nnz - cover;
    for (std::size_t k = 0; k < fill; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, free_slots.size() - 1);
      std::swap(free_slots[k], free_slots[pick(rng)]);
      layer.activate(free_slots[k]);
    }

    const double fan_in = static_cast<double>(nnz) / static_cast<double>(cols);
    const double gain = options.activation == Activation::kRelu ? 2.0 : 1.0;
    std::normal_distribution<double> normal(0.0, std::sqrt(gain / fan_in));
    for (std::size_t idx = 0; idx < layer.size(); ++idx) {
      if (layer.active(idx)) layer.set_weight(idx, normal(rng));
    }
    layers.push_back(std::move(layer));
  }
  return SparseNetwork(std::move(layers), sparsity, options.activation);
}

//-----------------------------------------------------------------------
//   Forward / backward
//-----------------------------------------------------------------------

ForwardCache forward(const SparseNetwork& net, const Matrix& batch) {
  if (batch.cols != net.input_dim()) {
    throw std::invalid_argument("batch width " + std::to_string(batch.cols) +
                                " does not match input dimension " +
                                std::to_string(net.input_dim()));
  }
  ForwardCache cache;
  cache.version = net.version();
  cache.dims = net.dims();
  cache.activations.reserve(net.num_layers());
  cache.activations.push_back(batch);

  const std::size_t batch_size = batch.rows;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const SparseLayer& layer = net.layer(l);
    const Matrix& in = cache.activations.back();
    Matrix out(batch_size, layer.cols());
    const auto w = layer.weights();
    const auto bias = layer.bias();
    for (std::size_t b = 0; b < batch_size; ++b) {
      double* o = out.row(b);
      if (layer.use_bias()) std::copy(bias.begin(), bias.end(), o);
      const double* x = in.row(b);
      for (std::size_t i = 0; i < layer.rows(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* wr = w.data() + i * layer.cols();
        for (std::size_t j = 0; j < layer.cols(); ++j) o[j] += xi * wr[j];
      }
    }
    const bool hidden = l + 1 < net.num_layers();
    if (hidden) {
      if (net.activation() == Activation::kRelu) {
        for (double& v : out.data) v = v > 0.0 ? v : 0.0;
      } else {
        for (double& v : out.data) v = std::tanh(v);
      }
      cache.activations.push_back(std::move(out));
    } else {
      cache.logits = std::move(out);
    }
  }
  return cache;
}

double cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows) {
    throw std::invalid_argument("label count does not match batch size");
  }
  double total = 0.0;
  for (std::size_t b = 0; b < logits.rows; ++b) {
    const double* z = logits.row(b);
    const double zmax = *std::max_element(z, z + logits.cols);
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c) sum += std::exp(z[c] - zmax);
    total += zmax + std::log(sum) - z[labels[b]];
  }
  return total / static_cast<double>(logits.rows);
}

double loss(const SparseNetwork& net, const Matrix& batch,
            std::span<const int> labels) {
  return cross_entropy(forward(net, batch).logits, labels);
}

Gradients backward(const SparseNetwork& net, const ForwardCache& cache,
                   std::span<const int> labels, bool want_dense) {
  if (cache.version != net.version() || cache.dims != net.dims()) {
    throw std::logic_error("forward cache does not match the network state");
  }
  const Matrix& logits = cache.logits;
  const std::size_t batch_size = logits.rows;
  if (labels.size() != batch_size) {
    throw std::invalid_argument("label count does not match batch size");
  }
  const std::size_t num_classes = logits.cols;

  // dL/dz for the output layer: (softmax - onehot) / B.
  Matrix delta(batch_size, num_classes);
  const double inv_b = 1.0 / static_cast<double>(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const double* z = logits.row(b);
    double* d = delta.row(b);
    const double zmax = *std::max_element(z, z + num_classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      d[c] = std::exp(z[c] - zmax);
      sum += d[c];
    }
    for (std::size_t c = 0; c < num_classes; ++c) d[c] = d[c] / sum * inv_b;
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw std::invalid_argument("label " + std::to_string(y) +
                                  " out of range");
    }
    d[y] -= inv_b;
  }

  const std::size_t num_layers = net.num_layers();
  Gradients grads;
  grads.masked.resize(num_layers);
  grads.bias.resize(num_layers);
  if (want_dense) grads.dense.resize(num_layers);

  for (std::size_t l = num_layers; l-- > 0;) {
    const SparseLayer& layer = net.layer(l);
    const Matrix& in = cache.activations[l];
    const std::size_t rows = layer.rows();
    const std::size_t cols = layer.cols();

    std::vector<double> dense(layer.size(), 0.0);
    for (std::size_t b = 0; b < batch_size; ++b) {
      const double* x = in.row(b);
      const double* d = delta.row(b);
      for (std::size_t i = 0; i < rows; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        double* g = dense.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) g[j] += xi * d[j];
      }
    }
    std::vector<double> bias_grad;
    if (layer.use_bias()) {
      bias_grad.assign(cols, 0.0);
      for (std::size_t b = 0; b < batch_size; ++b) {
        const double* d = delta.row(b);
        for (std::size_t j = 0; j < cols; ++j) bias_grad[j] += d[j];
      }
    }

    if (l > 0) {
      const auto w = layer.weights();
      Matrix prev(batch_size, rows);
      for (std::size_t b = 0; b < batch_size; ++b) {
        const double* d = delta.row(b);
        const double* a = in.row(b);
        double* p = prev.row(b);
        for (std::size_t i = 0; i < rows; ++i) {
          const double* wr = w.data() + i * cols;
          double s = 0.0;
          for (std::size_t j = 0; j < cols; ++j) s += wr[j] * d[j];
          // Derivative expressed through the cached activation.
          if (net.activation() == Activation::kRelu) {
            p[i] = a[i] > 0.0 ? s : 0.0;
          } else {
            p[i] = s * (1.0 - a[i] * a[i]);
          }
        }
      }
      delta = std::move(prev);
    }

    std::vector<double> masked(dense.size());
    const auto mask = layer.mask();
    for (std::size_t k = 0; k < dense.size(); ++k) {
      masked[k] = mask[k] ? dense[k] : 0.0;
    }
    grads.masked[l] = std::move(masked);
    grads.bias[l] = std::move(bias_grad);
    if (want_dense) grads.dense[l] = std::move(dense);
  }
  return grads;
}

//-----------------------------------------------------------------------
//   SGD
//-----------------------------------------------------------------------

SgdOptimizer::SgdOptimizer(double lr, double momentum, double weight_decay)
    : lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {
  if (!(lr > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) {
    throw std::invalid_argument("weight decay must be non-negative");
  }
}

void SgdOptimizer::step(SparseNetwork& net, const Gradients& grads,
                        std::optional<ProxTerm> prox) {
  const std::size_t num_layers = net.num_layers();
  if (grads.masked.size() != num_layers || grads.bias.size() != num_layers) {
    throw std::invalid_argument("gradient layer count mismatch");
  }
  const bool use_prox = prox.has_value() && prox->mu != 0.0;
  if (use_prox) {
    if (prox->anchor == nullptr || prox->anchor->dims() != net.dims()) {
      throw std::invalid_argument("proximal anchor shape mismatch");
    }
  }
  // The proximal term mu/2 |w - anchor|^2 is applied in closed form after the
  // gradient step, w <- (w + lr*mu*anchor) / (1 + lr*mu), which equals the
  // explicit step to first order in lr*mu and stays stable for any mu.
  const double prox_gain = use_prox ? lr_ * prox->mu : 0.0;
  const double shrink = 1.0 / (1.0 + prox_gain);
  if (velocity_.size() != num_layers) {
    velocity_.assign(num_layers, {});
    bias_velocity_.assign(num_layers, {});
  }

  for (std::size_t l = 0; l < num_layers; ++l) {
    SparseLayer& layer = net.layer(l);
    const auto& g = grads.masked[l];
    if (g.size() != layer.size()) {
      throw std::invalid_argument("gradient shape mismatch at layer " +
                                  std::to_string(l));
    }
    auto& v = velocity_[l];
    if (v.size() != layer.size()) v.assign(layer.size(), 0.0);
    auto w = layer.weights();
    const auto mask = layer.mask();
    const double* anchor =
        use_prox ? prox->anchor->layer(l).weights().data() : nullptr;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (!mask[k]) {
        v[k] = 0.0;
        continue;
      }
      v[k] = momentum_ * v[k] + g[k] + weight_decay_ * w[k];
      w[k] -= lr_ * v[k];
      if (anchor != nullptr) w[k] = (w[k] + prox_gain * anchor[k]) * shrink;
    }

    if (layer.use_bias()) {
      auto bias = layer.bias();
      const auto& gb = grads.bias[l];
      auto& vb = bias_velocity_[l];
      if (vb.size() != bias.size()) vb.assign(bias.size(), 0.0);
      const double* anchor_bias =
          use_prox ? prox->anchor->layer(l).bias().data() : nullptr;
      for (std::size_t j = 0; j < bias.size(); ++j) {
        vb[j] = momentum_ * vb[j] + gb[j];
        bias[j] -= lr_ * vb[j];
        if (anchor_bias != nullptr) {
          bias[j] = (bias[j] + prox_gain * anchor_bias[j]) * shrink;
        }
      }
    }
  }
}

}  // namespace dsffs
