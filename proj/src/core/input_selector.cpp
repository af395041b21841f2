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

#include "input_selector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dsffs {

//-----------------------------------------------------------------------
//   InputSchedule
//-----------------------------------------------------------------------

InputSchedule::InputSchedule(std::size_t input_dim, std::size_t features,
                             double zeta, double beta, std::size_t rounds)
    : input_dim_(input_dim),
      features_(features),
      zeta_(zeta),
      beta_(beta),
      rounds_(rounds) {
  if (input_dim == 0) throw ConfigError("input dimension must be positive");
  if (features == 0 || features > input_dim) {
    throw ConfigError("feature count K must lie in [1, " +
                      std::to_string(input_dim) + "], got " +
                      std::to_string(features));
  }
  if (!(zeta >= 0.0 && zeta < 1.0)) {
    throw ConfigError("zeta must lie in [0, 1)");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw ConfigError("beta must lie in (0, 1)");
  }
  if (rounds == 0) throw ConfigError("round count must be positive");

  remove_round_ = static_cast<std::size_t>(
      robust_ceil(beta * static_cast<double>(rounds)));
  const double budget = robust_ceil((1.0 - zeta) * static_cast<double>(input_dim) -
                                    static_cast<double>(features));
  total_removal_ = budget > 0.0 ? static_cast<std::size_t>(budget) : 0;
}

ScheduleStep InputSchedule::compute(std::size_t r) const {
  if (r < 1 || r > rounds_) {
    throw std::out_of_range("round " + std::to_string(r) + " outside [1, " +
                            std::to_string(rounds_) + "]");
  }
  if (r != next_round()) {
    throw std::logic_error("schedule history covers rounds < " +
                           std::to_string(next_round()) + ", asked for round " +
                           std::to_string(r));
  }
  const std::size_t t = total_removal_;
  const std::size_t tr = removed_;

  ScheduleStep step;
  if (r < remove_round_) {
    const std::size_t left = remove_round_ - r;
    step.remove = (t - tr + left - 1) / left;
  } else if (r == remove_round_) {
    // The ratio form divides by zero here; removing the remainder keeps the
    // total exact.
    step.remove = t - tr;
  }

  const double frac = zeta_ * (1.0 - static_cast<double>(r) /
                                         static_cast<double>(rounds_));
  step.regrow = static_cast<std::size_t>(
      robust_ceil(frac * static_cast<double>(tr)));
  step.regrow = std::min(step.regrow, tr);

  const std::size_t connected = input_dim_ - tr;
  const std::size_t spare = connected > features_ ? connected - features_ : 0;
  step.remove = std::min(step.remove, spare);
  step.regrow = std::min(step.regrow, connected - step.remove);
  step.prune = step.remove + step.regrow;
  return step;
}

void InputSchedule::advance(const ScheduleStep& step) {
  removed_ += step.remove;
  history_.push_back(step.remove);
}

//-----------------------------------------------------------------------
//   Strength and state
//-----------------------------------------------------------------------

double neuron_strength(const SparseLayer& layer, std::size_t i) {
  if (i >= layer.rows()) {
    throw std::out_of_range("input neuron " + std::to_string(i));
  }
  const auto w = layer.weights();
  double sum = 0.0;
  for (std::size_t j = 0; j < layer.cols(); ++j) {
    const std::size_t idx = layer.index(i, j);
    if (layer.active(idx)) sum += std::fabs(w[idx]);
  }
  return sum;
}

std::vector<double> neuron_strengths(const SparseLayer& layer) {
  std::vector<double> out(layer.rows());
  for (std::size_t i = 0; i < layer.rows(); ++i) {
    out[i] = neuron_strength(layer, i);
  }
  return out;
}

InputLayerState InputLayerState::from_layer(const SparseLayer& layer) {
  InputLayerState state;
  state.refresh(layer);
  return state;
}

void InputLayerState::refresh(const SparseLayer& layer) {
  connected.assign(layer.rows(), 0);
  removed.assign(layer.rows(), 0);
  for (std::size_t i = 0; i < layer.rows(); ++i) {
    connected[i] = layer.row_nnz(i) > 0 ? 1 : 0;
    removed[i] = connected[i] ? 0 : 1;
  }
  strengths = neuron_strengths(layer);
}

std::size_t InputLayerState::connected_count() const {
  return static_cast<std::size_t>(
      std::count(connected.begin(), connected.end(), std::uint8_t{1}));
}

std::size_t InputLayerState::removed_count() const {
  return static_cast<std::size_t>(
      std::count(removed.begin(), removed.end(), std::uint8_t{1}));
}

//-----------------------------------------------------------------------
//   Input-layer prune / regrow
//-----------------------------------------------------------------------

InputUpdate prune_input(SparseNetwork& net, InputLayerState& state,
                        const ScheduleStep& step, double zeta) {
  SparseLayer& layer = net.layer(0);
  state.refresh(layer);

  InputUpdate update;
  update.nnz_before = layer.nnz();

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < layer.rows(); ++i) {
    if (state.connected[i] && !state.removed[i]) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) {
                     return state.strengths[a] < state.strengths[b];
                   });
  std::size_t count = step.prune;
  if (count > candidates.size()) {
    log_warning("input pruning wanted " + std::to_string(count) +
                " neurons but only " + std::to_string(candidates.size()) +
                " are connected");
    count = candidates.size();
  }

  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t i = candidates[n];
    for (std::size_t j = 0; j < layer.cols(); ++j) {
      const std::size_t idx = layer.index(i, j);
      if (layer.active(idx)) {
        layer.deactivate(idx);
        update.connections.pruned.push_back({0, idx});
      }
    }
    update.pruned_neurons.push_back(i);
  }

  if (zeta > 0.0) {
    std::size_t open = 0;
    for (std::size_t i = 0; i < layer.rows(); ++i) {
      if (layer.row_nnz(i) > 0) open += layer.cols() - layer.row_nnz(i);
    }
    const auto extra = std::min(
        static_cast<std::size_t>(
            robust_floor(zeta * static_cast<double>(layer.nnz()))),
        open);
    for (std::size_t idx :
         prune_smallest_magnitude(layer, extra, KeepOne::kPerRow)) {
      update.connections.pruned.push_back({0, idx});
    }
  }
  state.refresh(layer);
  return update;
}

void regrow_input(SparseNetwork& net, InputLayerState& state,
                  const ScheduleStep& step, const Gradients& grads,
                  InputUpdate& update) {
  if (!grads.has_dense()) {
    throw std::invalid_argument("input regrowth needs dense gradients");
  }
  SparseLayer& layer = net.layer(0);
  const auto& g = grads.dense.front();
  if (g.size() != layer.size()) {
    throw std::invalid_argument("dense gradient shape does not match layer");
  }
  const std::size_t cols = layer.cols();

  std::vector<std::uint8_t> just_pruned(layer.rows(), 0);
  for (std::size_t i : update.pruned_neurons) just_pruned[i] = 1;

  // Best connection of every eligible disconnected neuron.
  struct Candidate {
    std::size_t neuron;
    std::size_t col;
    double score;
  };
  std::vector<Candidate> pool;
  for (std::size_t i = 0; i < layer.rows(); ++i) {
    if (layer.row_nnz(i) > 0 || just_pruned[i]) continue;
    Candidate c{i, 0, -1.0};
    for (std::size_t j = 0; j < cols; ++j) {
      const double s = std::fabs(g[i * cols + j]);
      if (s > c.score) {
        c.score = s;
        c.col = j;
      }
    }
    pool.push_back(c);
  }
  std::stable_sort(pool.begin(), pool.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.score > b.score;
                   });
  std::size_t count = step.regrow;
  if (count > pool.size()) {
    log_warning("input regrowth wanted " + std::to_string(count) +
                " neurons but the pool holds " + std::to_string(pool.size()));
    count = pool.size();
  }
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t idx = layer.index(pool[n].neuron, pool[n].col);
    layer.activate(idx, 0.0);
    update.connections.regrown.push_back({0, idx});
    update.regrown_neurons.push_back(pool[n].neuron);
  }

  const std::size_t nnz = layer.nnz();
  if (nnz < update.nnz_before) {
    std::vector<std::uint8_t> row_allowed(layer.rows(), 0);
    for (std::size_t i = 0; i < layer.rows(); ++i) {
      row_allowed[i] = layer.row_nnz(i) > 0 ? 1 : 0;
    }
    const auto excluded = update.connections.pruned_positions(0);
    for (std::size_t idx :
         regrow_largest_gradient(layer, g, update.nnz_before - nnz, excluded,
                                 row_allowed)) {
      update.connections.regrown.push_back({0, idx});
    }
  }
  state.refresh(layer);
}

FeatureSelection select_features(const SparseLayer& input_layer,
                                 std::size_t k) {
  const auto strengths = neuron_strengths(input_layer);
  std::vector<std::size_t> connected;
  for (std::size_t i = 0; i < input_layer.rows(); ++i) {
    if (input_layer.row_nnz(i) > 0) connected.push_back(i);
  }
  std::stable_sort(connected.begin(), connected.end(),
                   [&](std::size_t a, std::size_t b) {
                     return strengths[a] > strengths[b];
                   });
  FeatureSelection out;
  out.complete = connected.size() >= k;
  const std::size_t take = std::min(k, connected.size());
  for (std::size_t n = 0; n < take; ++n) {
    out.indices.push_back(connected[n]);
    out.strengths.push_back(strengths[connected[n]]);
  }
  return out;
}

}  // namespace dsffs
