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

// Input-layer feature selection: neuron strength scoring, the neuron
// prune/regrow schedule, input-layer topology updates and the final top-K
// feature extraction.

#ifndef DSFFS_CORE_INPUT_SELECTOR_HPP_
#define DSFFS_CORE_INPUT_SELECTOR_HPP_

#include <cstddef>
#include <vector>

#include "dst_update.hpp"
#include "sparse_net.hpp"

namespace dsffs {

// Neuron counts for one input-layer update.
struct ScheduleStep {
  std::size_t prune = 0;   // neurons disconnected this update
  std::size_t remove = 0;  // net growth of the disconnected pool
  std::size_t regrow = 0;  // pool neurons reconnected this update

  friend bool operator==(const ScheduleStep&, const ScheduleStep&) = default;
};

// Round-indexed neuron removal schedule. Over rounds 1..remove_round() the
// pool of disconnected input neurons grows to total_removal(); afterwards it
// stays constant while prune/regrow churn continues.
class InputSchedule {
 public:
  InputSchedule() = default;
  InputSchedule(std::size_t input_dim, std::size_t features, double zeta,
                double beta, std::size_t rounds);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t features() const { return features_; }
  double zeta() const { return zeta_; }
  double beta() const { return beta_; }
  std::size_t rounds() const { return rounds_; }

  // ceil(beta * rounds).
  std::size_t remove_round() const { return remove_round_; }
  // max(0, ceil((1 - zeta) * D - K)).
  std::size_t total_removal() const { return total_removal_; }
  // Neurons removed in rounds before next_round().
  std::size_t removed_before() const { return removed_; }
  std::size_t next_round() const { return history_.size() + 1; }
  const std::vector<std::size_t>& history() const { return history_; }

  // Counts for round r; r must equal next_round(). Throws std::out_of_range
  // for rounds outside [1, rounds()].
  ScheduleStep compute(std::size_t r) const;

  // Records the removal of round next_round().
  void advance(const ScheduleStep& step);

 private:
  std::size_t input_dim_ = 0;
  std::size_t features_ = 0;
  double zeta_ = 0.0;
  double beta_ = 0.0;
  std::size_t rounds_ = 0;
  std::size_t remove_round_ = 0;
  std::size_t total_removal_ = 0;
  std::size_t removed_ = 0;
  std::vector<std::size_t> history_;
};

// L1 norm of the active outgoing weights of input neuron i.
double neuron_strength(const SparseLayer& layer, std::size_t i);
std::vector<double> neuron_strengths(const SparseLayer& layer);

struct InputLayerState {
  std::vector<std::uint8_t> connected;
  std::vector<double> strengths;
  // Neurons outside the model after the last update; always !connected.
  std::vector<std::uint8_t> removed;

  static InputLayerState from_layer(const SparseLayer& layer);
  void refresh(const SparseLayer& layer);
  std::size_t connected_count() const;
  std::size_t removed_count() const;
};

struct InputUpdate {
  // Neurons disconnected in this update, weakest first.
  std::vector<std::size_t> pruned_neurons;
  std::vector<std::size_t> regrown_neurons;
  TopologyDelta connections;
  std::size_t nnz_before = 0;
};

// Disconnects the step.prune weakest connected neurons (ties: lowest index),
// then prunes floor(zeta * nnz) of the remaining input connections of
// smallest magnitude. Every still-connected neuron keeps one connection.
InputUpdate prune_input(SparseNetwork& net, InputLayerState& state,
                        const ScheduleStep& step, double zeta);

// Reconnects step.regrow neurons from the disconnected pool (neurons pruned in
// this same update are not eligible), each through its single
// largest-|gradient| connection, then regrows connections on connected neurons
// by descending |gradient| until the input layer is back at nnz_before.
void regrow_input(SparseNetwork& net, InputLayerState& state,
                  const ScheduleStep& step, const Gradients& grads,
                  InputUpdate& update);

struct FeatureSelection {
  std::vector<std::size_t> indices;
  std::vector<double> strengths;
  // False when fewer than K neurons were connected.
  bool complete = true;
};

// The K connected input neurons of highest strength, descending; ties by
// lowest index.
FeatureSelection select_features(const SparseLayer& input_layer,
                                 std::size_t k);

}  // namespace dsffs

#endif  // DSFFS_CORE_INPUT_SELECTOR_HPP_
