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

// Masked multilayer perceptron. Every layer keeps a dense weight buffer and an
// explicit connection mask; a weight is nonzero only where its mask bit is set.

#ifndef DSFFS_CORE_SPARSE_NET_HPP_
#define DSFFS_CORE_SPARSE_NET_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "common.hpp"

namespace dsffs {

enum class Activation { kRelu, kTanh };

// Fully connected layer of shape rows (fan-in) x cols (fan-out). Row i holds
// the outgoing connections of input neuron i.
class SparseLayer {
 public:
  SparseLayer() = default;
  SparseLayer(std::size_t rows, std::size_t cols, bool use_bias = true);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }
  std::size_t index(std::size_t i, std::size_t j) const { return i * cols_ + j; }
  bool use_bias() const { return use_bias_; }

  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const std::uint8_t> mask() const { return mask_; }
  std::span<double> bias() { return bias_; }
  std::span<const double> bias() const { return bias_; }

  bool active(std::size_t idx) const { return mask_[idx] != 0; }
  bool active(std::size_t i, std::size_t j) const { return active(index(i, j)); }
  double weight(std::size_t i, std::size_t j) const {
    return weights_[index(i, j)];
  }

  // Turns a connection on with the given value.
  void activate(std::size_t idx, double value = 0.0);
  // Turns a connection off and zeroes its weight.
  void deactivate(std::size_t idx);
  // Sets the value of an active connection; writes to inactive positions throw.
  void set_weight(std::size_t idx, double value);

  std::size_t nnz() const;
  std::size_t row_nnz(std::size_t i) const;
  std::size_t col_nnz(std::size_t j) const;

  // Mask-weight consistency: weight is zero wherever the mask is off.
  bool consistent() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  bool use_bias_ = true;
  std::vector<double> weights_;
  std::vector<std::uint8_t> mask_;
  std::vector<double> bias_;
};

class SparseNetwork {
 public:
  SparseNetwork() = default;
  SparseNetwork(std::vector<SparseLayer> layers, double sparsity,
                Activation activation = Activation::kRelu);

  std::size_t num_layers() const { return layers_.size(); }
  const std::vector<SparseLayer>& layers() const { return layers_; }
  const SparseLayer& layer(std::size_t l) const { return layers_.at(l); }
  // Mutable access invalidates any outstanding forward cache.
  SparseLayer& layer(std::size_t l) {
    touch();
    return layers_.at(l);
  }

  std::size_t input_dim() const { return layers_.front().rows(); }
  std::size_t output_dim() const { return layers_.back().cols(); }
  std::vector<std::size_t> dims() const;

  Activation activation() const { return activation_; }
  double sparsity() const { return sparsity_; }
  double density() const { return 1.0 - sparsity_; }
  std::vector<double> layer_densities() const;

  std::size_t nnz() const;
  std::vector<std::size_t> layer_nnz() const;
  // Weight count of the dense network with the same dimensions.
  std::size_t dense_size() const;

  std::uint64_t version() const { return version_; }
  void touch();

 private:
  std::vector<SparseLayer> layers_;
  double sparsity_ = 0.0;
  Activation activation_ = Activation::kRelu;
  std::uint64_t version_ = 0;
};

struct InitOptions {
  Activation activation = Activation::kRelu;
  bool use_bias = true;
};

// Erdos-Renyi allocation: per-layer density proportional to
// (fan_in + fan_out) / (fan_in * fan_out), scaled so the network density is
// 1 - sparsity. Layers that would exceed density 1 are saturated and their
// surplus is redistributed over the others.
std::vector<std::size_t> er_layer_nnz(std::span<const std::size_t> dims,
                                      double sparsity);

// Builds a random ER-sparse network. Every output neuron and every input
// feature receives at least one connection; weights are He-normal scaled by
// the effective (sparse) fan-in. Throws ConfigError when the budget cannot
// cover that.
SparseNetwork init_er_topology(std::span<const std::size_t> dims,
                               double sparsity, std::uint64_t seed,
                               const InitOptions& options = {});

struct ForwardCache {
  std::uint64_t version = 0;
  std::vector<std::size_t> dims;
  // activations[l] is the input of layer l; activations[0] is the batch.
  std::vector<Matrix> activations;
  Matrix logits;
};

ForwardCache forward(const SparseNetwork& net, const Matrix& batch);

// Mean softmax cross-entropy of a logits batch.
double cross_entropy(const Matrix& logits, std::span<const int> labels);

double loss(const SparseNetwork& net, const Matrix& batch,
            std::span<const int> labels);

struct Gradients {
  std::vector<std::vector<double>> masked;
  // Gradient at every position, including inactive ones; empty unless
  // requested.
  std::vector<std::vector<double>> dense;
  std::vector<std::vector<double>> bias;

  bool has_dense() const { return !dense.empty(); }
};

// Gradients of the mean cross-entropy loss. Throws std::logic_error when the
// cache was produced by a different network state.
Gradients backward(const SparseNetwork& net, const ForwardCache& cache,
                   std::span<const int> labels, bool want_dense = true);

struct ProxTerm {
  double mu = 0.0;
  const SparseNetwork* anchor = nullptr;
};

// SGD with heavy-ball momentum and an optional FedProx anchor. Only active
// positions move; velocity at inactive positions is held at zero so a regrown
// connection starts fresh. weight_decay adds an L2 term to the weight (not
// bias) gradients.
class SgdOptimizer {
 public:
  SgdOptimizer(double lr, double momentum, double weight_decay = 0.0);

  void step(SparseNetwork& net, const Gradients& grads,
            std::optional<ProxTerm> prox = std::nullopt);

  double lr() const { return lr_; }
  double momentum() const { return momentum_; }
  double weight_decay() const { return weight_decay_; }

 private:
  double lr_;
  double momentum_;
  double weight_decay_;
  std::vector<std::vector<double>> velocity_;
  std::vector<std::vector<double>> bias_velocity_;
};

}  // namespace dsffs

#endif  // DSFFS_CORE_SPARSE_NET_HPP_
