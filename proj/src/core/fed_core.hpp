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

// In-process horizontal federated training with dynamic sparse local models
// and embedded input-feature selection.

#ifndef DSFFS_CORE_FED_CORE_HPP_
#define DSFFS_CORE_FED_CORE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "data_pipeline.hpp"
#include "input_selector.hpp"
#include "metrics_cost.hpp"
#include "sparse_net.hpp"

namespace dsffs {

struct FedConfig {
  std::vector<std::size_t> hidden{200, 200};
  Activation activation = Activation::kRelu;
  double sparsity = 0.8;

  bool feature_selection = true;
  std::size_t features = 150;  // K
  double zeta = 0.2;
  double beta = 0.65;

  std::size_t clients = 10;           // M
  std::size_t clients_per_round = 0;  // 0 selects every client
  std::size_t local_epochs = 10;      // Q
  std::size_t rounds = 400;           // r_max
  std::size_t batch_size = 32;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double mu = 0.0;  // FedProx; 0 disables
  double adjust_rate = 0.05;
  std::size_t adjust_interval = 10;  // R_adj; 0 disables server adjustment
  std::uint64_t seed = 1;
  std::size_t workers = 0;  // parallel client trainings; 0 = one per client

  // Throws ConfigError naming the first violated constraint.
  void validate(std::size_t input_dim) const;
  std::size_t participants() const {
    return clients_per_round == 0 ? clients : clients_per_round;
  }
};

struct ServerState {
  SparseNetwork global;
  std::size_t round = 0;
  InputSchedule schedule;
  std::vector<std::uint8_t> global_removed;
  std::vector<std::size_t> layer_targets;  // per-layer nnz of the initial model
};

struct TrainingResult {
  ServerState server;
  std::vector<RoundMetrics> metrics;
  FeatureSelection features;
};

// Called after every round with that round's metrics and the server state.
using RoundCallback =
    std::function<void(const RoundMetrics&, const ServerState&)>;

// Q local epochs of minibatch SGD on the client's shard, each followed by the
// input-layer update (first epoch: the round's scheduled counts, later
// epochs: churn only) and the hidden-layer prune/regrow. With mu > 0 the
// received model is the FedProx anchor.
SparseNetwork local_train(const Dataset& data,
                          std::span<const std::size_t> shard,
                          std::size_t client_id, const SparseNetwork& global,
                          const ScheduleStep& step, std::size_t round,
                          const FedConfig& config);

struct WeightedModel {
  std::size_t samples = 0;
  const SparseNetwork* model = nullptr;
};

// Sample-weighted average with masked-off positions counted as zero; the
// resulting mask is the union of the client masks.
SparseNetwork aggregate(std::span<const WeightedModel> clients);

struct ReconcileParams {
  std::vector<std::size_t> layer_targets;
  bool feature_selection = true;
  std::size_t removed_target = 0;  // disconnected input neurons after the round
  std::size_t round = 0;
  double adjust_rate = 0.0;
  std::size_t adjust_interval = 0;
  std::uint64_t seed = 0;
};

// Restores per-layer nnz targets on an aggregated (union-masked) model.
// Hidden layers keep their largest-|w| connections. With feature selection the
// removed_target weakest input neurons (by strength on the aggregate) are
// disconnected, every surviving neuron keeps its strongest connection, and the
// rest of the input budget goes to the largest-|w| survivor connections.
// Every adjust_interval rounds a fraction adjust_rate of each layer's weakest
// kept connections is swapped for random inactive positions (weight zero).
SparseNetwork resparsify_and_reconcile(const SparseNetwork& aggregated,
                                       const ReconcileParams& params,
                                       std::vector<std::uint8_t>* removed);

// L2 distance between two networks over positions active in both.
double shared_mask_distance(const SparseNetwork& a, const SparseNetwork& b);

TrainingResult run_training(const FedConfig& config, const Dataset& data,
                            const PartitionedDataset& partition,
                            const RoundCallback& on_round = {});

}  // namespace dsffs

#endif  // DSFFS_CORE_FED_CORE_HPP_
