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

// Layer-wise magnitude pruning and gradient-magnitude regrowth.

#ifndef DSFFS_CORE_DST_UPDATE_HPP_
#define DSFFS_CORE_DST_UPDATE_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "sparse_net.hpp"

namespace dsffs {

// A connection is identified by its layer and row-major position, so index
// order is (row, col) lexicographic order.
struct Connection {
  std::size_t layer = 0;
  std::size_t index = 0;

  friend bool operator==(const Connection&, const Connection&) = default;
};

struct TopologyDelta {
  std::vector<Connection> pruned;
  std::vector<Connection> regrown;

  std::size_t pruned_in(std::size_t layer) const;
  std::size_t regrown_in(std::size_t layer) const;
  // Sorted positions pruned from `layer`.
  std::vector<std::size_t> pruned_positions(std::size_t layer) const;
};

// Which neurons must keep at least one connection while pruning.
enum class KeepOne { kNone, kPerColumn, kPerRow };

// Deactivates up to `count` active connections of smallest |weight|, ties
// broken by lowest position. A candidate is skipped when its removal would
// empty a column (or row) that `keep` protects. Returns pruned positions in
// pruning order.
std::vector<std::size_t> prune_smallest_magnitude(SparseLayer& layer,
                                                  std::size_t count,
                                                  KeepOne keep);

// Activates up to `count` inactive positions with the largest |gradient| at
// weight zero, ties broken by lowest position. Positions listed in `excluded`
// (sorted) and rows with row_allowed[i] == 0 are not eligible; an empty
// row_allowed admits every row. Returns activated positions.
std::vector<std::size_t> regrow_largest_gradient(
    SparseLayer& layer, std::span<const double> dense_grad, std::size_t count,
    std::span<const std::size_t> excluded,
    std::span<const std::uint8_t> row_allowed = {});

// For every layer l >= first_layer, prunes min(floor(fraction * nnz_l),
// inactive_l) active connections of smallest magnitude, keeping one
// connection per column. Fully dense layers are left alone.
TopologyDelta magnitude_prune_hidden(SparseNetwork& net, double fraction,
                                     std::size_t first_layer = 1);

// Completes `delta`: for every layer l >= first_layer, activates as many
// connections as were pruned there, by descending dense-gradient magnitude.
// Positions pruned in the same update are not eligible.
void gradient_regrow_hidden(SparseNetwork& net, const Gradients& grads,
                            TopologyDelta& delta, std::size_t first_layer = 1);

}  // namespace dsffs

#endif  // DSFFS_CORE_DST_UPDATE_HPP_
