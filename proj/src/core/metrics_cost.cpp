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

#include "metrics_cost.hpp"

#include <algorithm>
#include <cmath>

namespace dsffs {

namespace {
constexpr std::size_t kEvalBatch = 256;
}  // namespace

std::vector<int> predict(const SparseNetwork& net, const Dataset& ds,
                         std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t start = 0; start < rows.size(); start += kEvalBatch) {
    const auto chunk =
        rows.subspan(start, std::min(kEvalBatch, rows.size() - start));
    const auto cache = forward(net, gather_rows(ds, chunk));
    const Matrix& logits = cache.logits;
    for (std::size_t b = 0; b < logits.rows; ++b) {
      const double* z = logits.row(b);
      out.push_back(static_cast<int>(std::max_element(z, z + logits.cols) - z));
    }
  }
  return out;
}

double accuracy(const SparseNetwork& net, const Dataset& ds,
                std::span<const std::size_t> rows) {
  if (rows.empty()) return 0.0;
  const auto pred = predict(net, ds, rows);
  std::size_t correct = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (pred[k] == ds.y[rows[k]]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

std::uint64_t flops_per_example(const SparseNetwork& net, Phase phase) {
  std::uint64_t flops = 0;
  for (const auto& layer : net.layers()) {
    flops += 2 * static_cast<std::uint64_t>(layer.nnz());
    if (layer.use_bias()) flops += layer.cols();
  }
  return phase == Phase::kTraining ? 3 * flops : flops;
}

std::uint64_t upload_cost_bits(std::uint64_t n_params, double sparsity) {
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
    throw std::invalid_argument("sparsity must lie in [0, 1]");
  }
  const double bits =
      (32.0 * (1.0 - sparsity) + 1.0) * static_cast<double>(n_params);
  return static_cast<std::uint64_t>(robust_ceil(bits));
}

RoundMetrics record_round(const SparseNetwork& global,
                          const RoundCostInputs& inputs,
                          const RoundMetrics* previous) {
  RoundMetrics m;
  if (previous != nullptr) m = *previous;
  m.round = inputs.round;
  m.test_accuracy = inputs.test_accuracy;
  m.client_drift = inputs.client_drift;

  const std::uint64_t per_example = flops_per_example(global, Phase::kTraining);
  const std::uint64_t n = global.dense_size();
  const std::size_t nnz = global.nnz();
  const double sparsity =
      n == 0 ? 0.0 : 1.0 - static_cast<double>(nnz) / static_cast<double>(n);
  const std::uint64_t model_bits = upload_cost_bits(n, sparsity);
  const std::uint64_t batch = std::max<std::size_t>(1, inputs.batch_size);
  for (std::size_t samples : inputs.participant_samples) {
    const std::uint64_t steps = (samples + batch - 1) / batch;
    m.cumulative_flops += inputs.local_epochs * steps * batch * per_example;
    m.cumulative_upload_bits += model_bits;
    m.cumulative_download_bits += model_bits;
  }
  m.global_nnz = nnz;
  std::size_t connected = 0;
  const SparseLayer& input = global.layer(0);
  for (std::size_t i = 0; i < input.rows(); ++i) {
    if (input.row_nnz(i) > 0) ++connected;
  }
  m.connected_input_neurons = connected;
  return m;
}

}  // namespace dsffs
