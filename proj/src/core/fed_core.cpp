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

#include "fed_core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "dst_update.hpp"

namespace dsffs {

namespace {

// Rows used to score regrowth candidates at each topology update.
constexpr std::size_t kRegrowthSamples = 512;

enum Stream : std::uint64_t {
  kClientStream = 0xc11e,
  kServerStream = 0x5e4e,
  kSelectStream = 0x5e1e,
};

// Mean dense gradient over `rows`, evaluated in chunks.
Gradients dense_gradient(const SparseNetwork& net, const Dataset& data,
                         std::span<const std::size_t> rows) {
  constexpr std::size_t kChunk = 128;
  Gradients total;
  for (std::size_t start = 0; start < rows.size(); start += kChunk) {
    const auto chunk = rows.subspan(start, std::min(kChunk, rows.size() - start));
    const auto cache = forward(net, gather_rows(data, chunk));
    const auto labels = gather_labels(data, chunk);
    Gradients g = backward(net, cache, labels, /*want_dense=*/true);
    const double w =
        static_cast<double>(chunk.size()) / static_cast<double>(rows.size());
    if (total.masked.empty()) {
      total.masked.resize(g.masked.size());
      total.dense.resize(g.dense.size());
      total.bias.resize(g.bias.size());
      for (std::size_t l = 0; l < g.masked.size(); ++l) {
        total.masked[l].assign(g.masked[l].size(), 0.0);
        total.dense[l].assign(g.dense[l].size(), 0.0);
        total.bias[l].assign(g.bias[l].size(), 0.0);
      }
    }
    for (std::size_t l = 0; l < g.masked.size(); ++l) {
      for (std::size_t k = 0; k < g.dense[l].size(); ++k) {
        total.masked[l][k] += w * g.masked[l][k];
        total.dense[l][k] += w * g.dense[l][k];
      }
      for (std::size_t k = 0; k < g.bias[l].size(); ++k) {
        total.bias[l][k] += w * g.bias[l][k];
      }
    }
  }
  return total;
}

// Activates `count` random inactive positions (weight zero) in allowed rows,
// skipping `excluded` (sorted).
std::size_t regrow_random(SparseLayer& layer, std::size_t count,
                          std::span<const std::size_t> excluded,
                          std::span<const std::uint8_t> row_allowed, Rng& rng) {
  if (count == 0) return 0;
  std::vector<std::size_t> candidates;
  for (std::size_t idx = 0; idx < layer.size(); ++idx) {
    if (layer.active(idx)) continue;
    if (!row_allowed.empty() && !row_allowed[idx / layer.cols()]) continue;
    if (std::binary_search(excluded.begin(), excluded.end(), idx)) continue;
    candidates.push_back(idx);
  }
  const std::size_t take = std::min(count, candidates.size());
  for (std::size_t k = 0; k < take; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, candidates.size() - 1);
    std::swap(candidates[k], candidates[pick(rng)]);
    layer.activate(candidates[k], 0.0);
  }
  if (take < count) {
    log_warning("server regrowth short by " + std::to_string(count - take) +
                " connections");
  }
  return take;
}

// Keeps the `target` largest-|w| active positions among `eligible` ones
// (ties: lowest position); positions in rows not allowed are dropped.
void keep_top_k(SparseLayer& layer, std::size_t target,
                std::span<const std::uint8_t> row_allowed,
                std::vector<std::uint8_t>* reserved) {
  const auto w = layer.weights();
  std::vector<std::size_t> active;
  for (std::size_t idx = 0; idx < layer.size(); ++idx) {
    if (!layer.active(idx)) continue;
    if (!row_allowed.empty() && !row_allowed[idx / layer.cols()]) {
      layer.deactivate(idx);
      continue;
    }
    active.push_back(idx);
  }
  std::size_t kept = 0;
  if (reserved != nullptr) {
    for (std::size_t idx : active) kept += (*reserved)[idx];
  }
  std::stable_sort(active.begin(), active.end(),
                   [&](std::size_t a, std::size_t b) {
                     return std::fabs(w[a]) > std::fabs(w[b]);
                   });
  for (std::size_t idx : active) {
    if (reserved != nullptr && (*reserved)[idx]) continue;
    if (kept < target) {
      ++kept;
    } else {
      layer.deactivate(idx);
    }
  }
}

}  // namespace

//-----------------------------------------------------------------------
//   Configuration
//-----------------------------------------------------------------------

void FedConfig::validate(std::size_t input_dim) const {
  if (clients < 2) {
    throw ConfigError(
        "clients: M must be at least 2 (one client is centralized feature "
        "selection), got " + std::to_string(clients));
  }
  if (clients_per_round > clients) {
    throw ConfigError("clients_per_round exceeds clients");
  }
  if (rounds == 0) throw ConfigError("rounds must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (!(mu >= 0.0)) throw ConfigError("mu must be non-negative");
  if (!(weight_decay >= 0.0)) {
    throw ConfigError("weight_decay must be non-negative");
  }
  if (!(zeta > 0.0 && zeta < 1.0)) throw ConfigError("zeta must lie in (0, 1)");
  if (!(adjust_rate >= 0.0 && adjust_rate < 1.0)) {
    throw ConfigError("adjust_rate must lie in [0, 1)");
  }
  if (!(sparsity >= 0.0 && sparsity < 1.0)) {
    throw ConfigError("sparsity must lie in [0, 1)");
  }
  for (std::size_t h : hidden) {
    if (h == 0) throw ConfigError("hidden layer widths must be positive");
  }
  if (feature_selection) {
    if (features == 0 || features > input_dim) {
      throw ConfigError("features (K) must lie in [1, " +
                        std::to_string(input_dim) + "], got " +
                        std::to_string(features));
    }
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  }
}

//-----------------------------------------------------------------------
//   Client side
//-----------------------------------------------------------------------

SparseNetwork local_train(const Dataset& data,
                          std::span<const std::size_t> shard,
                          std::size_t client_id, const SparseNetwork& global,
                          const ScheduleStep& step, std::size_t round,
                          const FedConfig& config) {
  SparseNetwork net = global;
  if (config.local_epochs == 0 || shard.empty()) return net;

  Rng rng = make_rng(config.seed, kClientStream ^ (round << 20), client_id);
  SgdOptimizer optimizer(config.lr, config.momentum, config.weight_decay);
  std::optional<ProxTerm> prox;
  if (config.mu > 0.0) prox = ProxTerm{config.mu, &global};
  InputLayerState input_state = InputLayerState::from_layer(net.layer(0));

  std::vector<std::size_t> order(shard.begin(), shard.end());
  const std::size_t batch = std::min(config.batch_size, order.size());
  const ScheduleStep churn{step.regrow, 0, step.regrow};

  for (std::size_t epoch = 0; epoch < config.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const auto rows = std::span<const std::size_t>(order).subspan(
          start, std::min(batch, order.size() - start));
      const auto cache = forward(net, gather_rows(data, rows));
      const auto labels = gather_labels(data, rows);
      optimizer.step(net, backward(net, cache, labels, /*want_dense=*/false),
                     prox);
    }

    std::shuffle(order.begin(), order.end(), rng);
    const auto scoring = std::span<const std::size_t>(order).subspan(
        0, std::min(kRegrowthSamples, order.size()));
    const Gradients grads = dense_gradient(net, data, scoring);

    if (config.feature_selection) {
      const ScheduleStep& now = epoch == 0 ? step : churn;
      InputUpdate update = prune_input(net, input_state, now, config.zeta);
      regrow_input(net, input_state, now, grads, update);
      TopologyDelta delta = magnitude_prune_hidden(net, config.zeta, 1);
      gradient_regrow_hidden(net, grads, delta, 1);
    } else {
      TopologyDelta delta = magnitude_prune_hidden(net, config.zeta, 0);
      gradient_regrow_hidden(net, grads, delta, 0);
    }
  }
  return net;
}

//-----------------------------------------------------------------------
//   Server side
//-----------------------------------------------------------------------

SparseNetwork aggregate(std::span<const WeightedModel> clients) {
  if (clients.empty()) throw std::invalid_argument("no client models");
  const SparseNetwork& first = *clients.front().model;
  std::size_t total = 0;
  for (const auto& c : clients) {
    if (c.model == nullptr || c.model->dims() != first.dims()) {
      throw std::invalid_argument("client models differ in shape");
    }
    total += c.samples;
  }
  if (total == 0) throw std::invalid_argument("client sample counts sum to 0");

  std::vector<SparseLayer> layers;
  for (std::size_t l = 0; l < first.num_layers(); ++l) {
    const SparseLayer& shape = first.layer(l);
    SparseLayer out(shape.rows(), shape.cols(), shape.use_bias());
    std::vector<double> sum(shape.size(), 0.0);
    std::vector<std::uint8_t> any(shape.size(), 0);
    std::vector<double> bias(shape.bias().size(), 0.0);
    for (const auto& c : clients) {
      const double coef =
          static_cast<double>(c.samples) / static_cast<double>(total);
      const SparseLayer& layer = c.model->layer(l);
      const auto w = layer.weights();
      const auto mask = layer.mask();
      for (std::size_t k = 0; k < sum.size(); ++k) {
        if (!mask[k]) continue;
        sum[k] += coef * w[k];
        any[k] = 1;
      }
      const auto b = layer.bias();
      for (std::size_t j = 0; j < bias.size(); ++j) bias[j] += coef * b[j];
    }
    for (std::size_t k = 0; k < sum.size(); ++k) {
      if (any[k]) out.activate(k, sum[k]);
    }
    std::copy(bias.begin(), bias.end(), out.bias().begin());
    layers.push_back(std::move(out));
  }
  return SparseNetwork(std::move(layers), first.sparsity(), first.activation());
}

SparseNetwork resparsify_and_reconcile(const SparseNetwork& aggregated,
                                       const ReconcileParams& params,
                                       std::vector<std::uint8_t>* removed) {
  if (params.layer_targets.size() != aggregated.num_layers()) {
    throw std::invalid_argument("layer target count mismatch");
  }
  SparseNetwork net = aggregated;
  Rng rng = make_rng(params.seed, kServerStream, params.round);
  const std::size_t first_hidden = params.feature_selection ? 1 : 0;

  for (std::size_t l = first_hidden; l < net.num_layers(); ++l) {
    SparseLayer& layer = net.layer(l);
    keep_top_k(layer, params.layer_targets[l], {}, nullptr);
    const std::size_t nnz = layer.nnz();
    if (nnz < params.layer_targets[l]) {
      regrow_random(layer, params.layer_targets[l] - nnz, {}, {}, rng);
    }
  }

  std::vector<std::uint8_t> survivors;
  if (params.feature_selection) {
    SparseLayer& input = net.layer(0);
    const std::size_t rows = input.rows();
    const std::size_t cols = input.cols();
    const auto strengths = neuron_strengths(input);
    std::vector<std::size_t> ranking(rows);
    std::iota(ranking.begin(), ranking.end(), 0);
    // Neurons without any connection in the union go first, then by strength.
    std::stable_sort(ranking.begin(), ranking.end(),
                     [&](std::size_t a, std::size_t b) {
                       const bool ea = input.row_nnz(a) == 0;
                       const bool eb = input.row_nnz(b) == 0;
                       if (ea != eb) return ea;
                       return strengths[a] < strengths[b];
                     });
    const std::size_t n_removed = std::min(params.removed_target, rows);
    survivors.assign(rows, 1);
    for (std::size_t n = 0; n < n_removed; ++n) survivors[ranking[n]] = 0;

    // Every survivor keeps its strongest connection.
    std::vector<std::uint8_t> reserved(input.size(), 0);
    const auto w = input.weights();
    std::size_t n_reserved = 0;
    for (std::size_t i = 0; i < rows; ++i) {
      if (!survivors[i]) continue;
      std::size_t best = cols;
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t idx = input.index(i, j);
        if (input.active(idx) &&
            (best == cols || std::fabs(w[idx]) > std::fabs(w[input.index(i, best)]))) {
          best = j;
        }
      }
      if (best == cols) {
        std::uniform_int_distribution<std::size_t> pick(0, cols - 1);
        best = pick(rng);
        input.activate(input.index(i, best), 0.0);
        log_warning("surviving input neuron " + std::to_string(i) +
                    " had no connection; added one at random");
      }
      reserved[input.index(i, best)] = 1;
      ++n_reserved;
    }
    const std::size_t target = std::max(params.layer_targets[0], n_reserved);
    keep_top_k(input, target, survivors, &reserved);
    const std::size_t nnz = input.nnz();
    if (nnz < target) regrow_random(input, target - nnz, {}, survivors, rng);
  } else {
    SparseLayer& input = net.layer(0);
    keep_top_k(input, params.layer_targets[0], {}, nullptr);
    const std::size_t nnz = input.nnz();
    if (nnz < params.layer_targets[0]) {
      regrow_random(input, params.layer_targets[0] - nnz, {}, {}, rng);
    }
  }

  const bool adjust = params.adjust_interval > 0 && params.adjust_rate > 0.0 &&
                      params.round % params.adjust_interval == 0;
  if (adjust) {
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      SparseLayer& layer = net.layer(l);
      const bool input_fs = l == 0 && params.feature_selection;
      const auto count = std::min(
          static_cast<std::size_t>(robust_floor(
              params.adjust_rate *
              static_cast<double>(params.layer_targets[l]))),
          layer.size() - layer.nnz());
      auto pruned = prune_smallest_magnitude(
          layer, count, input_fs ? KeepOne::kPerRow : KeepOne::kPerColumn);
      std::sort(pruned.begin(), pruned.end());
      regrow_random(layer, pruned.size(), pruned,
                    input_fs ? std::span<const std::uint8_t>(survivors)
                             : std::span<const std::uint8_t>(),
                    rng);
    }
  }

  if (removed != nullptr) {
    const SparseLayer& input = net.layer(0);
    removed->assign(input.rows(), 0);
    for (std::size_t i = 0; i < input.rows(); ++i) {
      (*removed)[i] = input.row_nnz(i) == 0 ? 1 : 0;
    }
  }
  return net;
}

double shared_mask_distance(const SparseNetwork& a, const SparseNetwork& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("shape mismatch");
  double sum = 0.0;
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    const auto& la = a.layer(l);
    const auto& lb = b.layer(l);
    const auto wa = la.weights();
    const auto wb = lb.weights();
    for (std::size_t k = 0; k < la.size(); ++k) {
      if (la.active(k) && lb.active(k)) {
        const double d = wa[k] - wb[k];
        sum += d * d;
      }
    }
  }
  return std::sqrt(sum);
}

//-----------------------------------------------------------------------
//   Round loop
//-----------------------------------------------------------------------

TrainingResult run_training(const FedConfig& config, const Dataset& data,
                            const PartitionedDataset& partition,
                            const RoundCallback& on_round) {
  config.validate(data.dim());
  if (partition.shards.size() != config.clients) {
    throw ConfigError("partition has " +
                      std::to_string(partition.shards.size()) +
                      " shards for " + std::to_string(config.clients) +
                      " clients");
  }
  for (std::size_t m = 0; m < partition.shards.size(); ++m) {
    if (partition.shards[m].empty()) {
      throw ConfigError("client " + std::to_string(m) + " has an empty shard");
    }
  }
  if (data.num_classes < 2) throw ConfigError("need at least two classes");

  std::vector<std::size_t> dims{data.dim()};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(data.num_classes);

  TrainingResult result;
  ServerState& server = result.server;
  server.global = init_er_topology(dims, config.sparsity, config.seed,
                                   InitOptions{config.activation, true});
  server.layer_targets = server.global.layer_nnz();
  if (config.feature_selection) {
    server.schedule = InputSchedule(data.dim(), config.features, config.zeta,
                                    config.beta, config.rounds);
  }
  server.global_removed.assign(data.dim(), 0);

  const std::size_t n_participants = config.participants();
  for (std::size_t r = 1; r <= config.rounds; ++r) {
    const ScheduleStep step =
        config.feature_selection ? server.schedule.compute(r) : ScheduleStep{};

    std::vector<std::size_t> selected(config.clients);
    std::iota(selected.begin(), selected.end(), 0);
    if (n_participants < config.clients) {
      Rng pick = make_rng(config.seed, kSelectStream, r);
      std::shuffle(selected.begin(), selected.end(), pick);
      selected.resize(n_participants);
      std::sort(selected.begin(), selected.end());
    }

    std::vector<SparseNetwork> locals(selected.size());
    auto train_one = [&](std::size_t k) {
      const std::size_t m = selected[k];
      locals[k] = local_train(data, partition.shards[m], m, server.global, step,
                              r, config);
    };
    const std::size_t workers = config.workers == 0
                                    ? selected.size()
                                    : std::min(config.workers, selected.size());
    if (workers <= 1) {
      for (std::size_t k = 0; k < selected.size(); ++k) train_one(k);
    } else {
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::atomic<bool> failed{false};
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
          for (;;) {
            const std::size_t k = next++;
            if (k >= selected.size() || failed) return;
            try {
              train_one(k);
            } catch (...) {
              if (!failed.exchange(true)) failure = std::current_exception();
            }
          }
        });
      }
      for (auto& th : pool) th.join();
      if (failure) std::rethrow_exception(failure);
    }

    std::vector<WeightedModel> weighted;
    std::vector<std::size_t> samples;
    double drift = 0.0;
    for (std::size_t k = 0; k < selected.size(); ++k) {
      const std::size_t n = partition.shards[selected[k]].size();
      weighted.push_back({n, &locals[k]});
      samples.push_back(n);
      drift += shared_mask_distance(locals[k], server.global);
    }
    drift /= static_cast<double>(selected.size());

    ReconcileParams params;
    params.layer_targets = server.layer_targets;
    params.feature_selection = config.feature_selection;
    params.removed_target =
        config.feature_selection ? server.schedule.removed_before() + step.remove
                                 : 0;
    params.round = r;
    params.adjust_rate = config.adjust_rate;
    params.adjust_interval = config.adjust_interval;
    params.seed = config.seed;
    server.global = resparsify_and_reconcile(aggregate(weighted), params,
                                             &server.global_removed);
    if (config.feature_selection) server.schedule.advance(step);
    server.round = r;

    RoundCostInputs cost;
    cost.round = r;
    cost.participant_samples = samples;
    cost.local_epochs = config.local_epochs;
    cost.batch_size = config.batch_size;
    cost.test_accuracy = accuracy(server.global, data, partition.test);
    cost.client_drift = drift;
    result.metrics.push_back(record_round(
        server.global, cost,
        result.metrics.empty() ? nullptr : &result.metrics.back()));
    if (on_round) on_round(result.metrics.back(), server);
  }

  const std::size_t k = config.feature_selection ? config.features : data.dim();
  result.features = select_features(server.global.layer(0), k);
  if (!result.features.complete) {
    log_warning("only " + std::to_string(result.features.indices.size()) +
                " input neurons remain connected; fewer than K");
  }
  return result;
}

}  // namespace dsffs
