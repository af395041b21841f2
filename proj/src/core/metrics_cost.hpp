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

// Accuracy, FLOPs and communication accounting.
//
// FLOPs conventions: a multiply-accumulate is 2 FLOPs, a bias add 1 FLOP, and
// a training step costs 3x inference (forward plus a backward pass of twice
// the forward cost). Topology-update work (strength sums, sorting, the dense
// gradient pass used for regrowth scoring) is not counted.

#ifndef DSFFS_CORE_METRICS_COST_HPP_
#define DSFFS_CORE_METRICS_COST_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "data_pipeline.hpp"
#include "sparse_net.hpp"

namespace dsffs {

struct RoundMetrics {
  std::size_t round = 0;
  double test_accuracy = 0.0;
  std::uint64_t cumulative_flops = 0;
  std::uint64_t cumulative_upload_bits = 0;
  std::uint64_t cumulative_download_bits = 0;
  std::size_t connected_input_neurons = 0;
  std::size_t global_nnz = 0;
  // Mean over participating clients of ||theta_client - theta_global||_2 on
  // positions active in both.
  double client_drift = 0.0;
};

enum class Phase { kInference, kTraining };

// Argmax predictions; ties go to the lowest class index.
std::vector<int> predict(const SparseNetwork& net, const Dataset& ds,
                         std::span<const std::size_t> rows);

double accuracy(const SparseNetwork& net, const Dataset& ds,
                std::span<const std::size_t> rows);

std::uint64_t flops_per_example(const SparseNetwork& net, Phase phase);

// ceil((32 * (1 - S) + 1) * n): 32-bit values for the active weights plus one
// mask bit per position.
std::uint64_t upload_cost_bits(std::uint64_t n_params, double sparsity);

struct RoundCostInputs {
  std::size_t round = 0;
  // Local sample counts of the clients that trained this round.
  std::vector<std::size_t> participant_samples;
  std::size_t local_epochs = 0;
  std::size_t batch_size = 1;
  double test_accuracy = 0.0;
  double client_drift = 0.0;
};

// Appends the cost of one completed round to `previous` (nullptr for the
// first round). Per client: Q * ceil(N_m / B) * B training examples, and one
// upload plus one download of the global model.
RoundMetrics record_round(const SparseNetwork& global,
                          const RoundCostInputs& inputs,
                          const RoundMetrics* previous);

}  // namespace dsffs

#endif  // DSFFS_CORE_METRICS_COST_HPP_
