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

#include "dst_update.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dsffs {

std::size_t TopologyDelta::pruned_in(std::size_t layer) const {
  return static_cast<std::size_t>(
      std::count_if(pruned.begin(), pruned.end(),
                    [&](const Connection& c) { return c.layer == layer; }));
}

std::size_t TopologyDelta::regrown_in(std::size_t layer) const {
  return static_cast<std::size_t>(
      std::count_if(regrown.begin(), regrown.end(),
                    [&](const Connection& c) { return c.layer == layer; }));
}

std::vector<std::size_t> TopologyDelta::pruned_positions(
    std::size_t layer) const {
  std::vector<std::size_t> out;
  for (const auto& c : pruned) {
    if (c.layer == layer) out.push_back(c.index);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> prune_smallest_magnitude(SparseLayer& layer,
                                                  std::size_t count,
                                                  KeepOne keep) {
  std::vector<std::size_t> pruned;
  if (count == 0) return pruned;
  const auto w = layer.weights();
  std::vector<std::size_t> order;
  order.reserve(layer.nnz());
  for (std::size_t idx = 0; idx < layer.size(); ++idx) {
    if (layer.active(idx)) order.push_back(idx);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return std::fabs(w[a]) < std::fabs(w[b]);
                   });

  std::vector<std::size_t> remaining;
  if (keep == KeepOne::kPerColumn) {
    remaining.resize(layer.cols());
    for (std::size_t j = 0; j < layer.cols(); ++j) {
      remaining[j] = layer.col_nnz(j);
    }
  } else if (keep == KeepOne::kPerRow) {
    remaining.resize(layer.rows());
    for (std::size_t i = 0; i < layer.rows(); ++i) {
      remaining[i] = layer.row_nnz(i);
    }
  }

  pruned.reserve(count);
  for (std::size_t idx : order) {
    if (pruned.size() == count) break;
    if (keep != KeepOne::kNone) {
      const std::size_t key =
          keep == KeepOne::kPerColumn ? idx % layer.cols() : idx / layer.cols();
      if (remaining[key] <= 1) continue;
      --remaining[key];
    }
    layer.deactivate(idx);
    pruned.push_back(idx);
  }
  return pruned;
}

std::vector<std::size_t> regrow_largest_gradient(
    SparseLayer& layer, std::span<const double> dense_grad, std::size_t count,
    std::span<const std::size_t> excluded,
    std::span<const std::uint8_t> row_allowed) {
  std::vector<std::size_t> grown;
  if (count == 0) return grown;
  if (dense_grad.size() != layer.size()) {
    throw std::invalid_argument("dense gradient shape does not match layer");
  }
  std::vector<std::size_t> candidates;
  for (std::size_t idx = 0; idx < layer.size(); ++idx) {
    if (layer.active(idx)) continue;
    if (!row_allowed.empty() && !row_allowed[idx / layer.cols()]) continue;
    if (std::binary_search(excluded.begin(), excluded.end(), idx)) continue;
    candidates.push_back(idx);
  }
  auto better = [&](std::size_t a, std::size_t b) {
    const double ga = std::fabs(dense_grad[a]);
    const double gb = std::fabs(dense_grad[b]);
    return ga != gb ? ga > gb : a < b;
  };
  const std::size_t take = std::min(count, candidates.size());
  if (take < count) {
    log_warning("regrowth wanted " + std::to_string(count) +
                " connections but only " + std::to_string(candidates.size()) +
                " are eligible");
  }
  std::partial_sort(candidates.begin(), candidates.begin() + take,
                    candidates.end(), better);
  grown.assign(candidates.begin(), candidates.begin() + take);
  for (std::size_t idx : grown) layer.activate(idx, 0.0);
  return grown;
}

TopologyDelta magnitude_prune_hidden(SparseNetwork& net, double fraction,
                                     std::size_t first_layer) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("prune fraction must lie in (0, 1)");
  }
  TopologyDelta delta;
  for (std::size_t l = first_layer; l < net.num_layers(); ++l) {
    const std::size_t nnz = net.layer(l).nnz();
    if (nnz == 0) {
      log_warning("layer " + std::to_string(l) + " has no active connections");
      continue;
    }
    // Never prune more than can be regrown elsewhere in the layer.
    const auto count = std::min(
        static_cast<std::size_t>(
            robust_floor(fraction * static_cast<double>(nnz))),
        net.layer(l).size() - nnz);
    for (std::size_t idx :
         prune_smallest_magnitude(net.layer(l), count, KeepOne::kPerColumn)) {
      delta.pruned.push_back({l, idx});
    }
  }
  return delta;
}

void gradient_regrow_hidden(SparseNetwork& net, const Gradients& grads,
                            TopologyDelta& delta, std::size_t first_layer) {
  if (!grads.has_dense()) {
    throw std::invalid_argument("regrowth needs dense gradients");
  }
  for (std::size_t l = first_layer; l < net.num_layers(); ++l) {
    const std::size_t count = delta.pruned_in(l);
    if (count == 0) continue;
    const auto excluded = delta.pruned_positions(l);
    for (std::size_t idx : regrow_largest_gradient(net.layer(l), grads.dense[l],
                                                   count, excluded)) {
      delta.regrown.push_back({l, idx});
    }
  }
}

}  // namespace dsffs
