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

#ifndef DSFFS_CORE_DATA_PIPELINE_HPP_
#define DSFFS_CORE_DATA_PIPELINE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace dsffs {

struct Dataset {
  std::string name;
  Matrix x;
  std::vector<int> y;  // dense labels in [0, num_classes)
  std::size_t num_classes = 0;
  std::vector<std::string> feature_names;
  // Ground-truth informative columns; only set for synthetic data.
  std::vector<std::size_t> informative;

  std::size_t size() const { return x.rows; }
  std::size_t dim() const { return x.cols; }
  std::vector<std::size_t> class_histogram() const;
  std::vector<std::size_t> class_histogram(std::span<const std::size_t> rows) const;
};

enum class DataFormat { kCsv, kIdx, kLibsvm };

DataFormat parse_data_format(const std::string& name);

// CSV with a header row. The label column is looked up by name (default: the
// last column). Labels are mapped to dense ids in sorted order (numerically
// when every label parses as a number).
Dataset load_csv(const std::string& path, const std::string& label_column = "");
void write_csv(const Dataset& ds, const std::string& path);

// IDX image/label file pair (magic 0x00000803 / 0x00000801, unsigned bytes).
Dataset load_idx(const std::string& images_path, const std::string& labels_path);
void write_idx(const Dataset& ds, const std::string& images_path,
               const std::string& labels_path, std::size_t image_rows,
               std::size_t image_cols);

// `label idx:val ...` with 1-based indices. num_features == 0 infers D from
// the largest index seen.
Dataset load_libsvm(const std::string& path, std::size_t num_features = 0);
void write_libsvm(const Dataset& ds, const std::string& path);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Per-class shuffle, round(test_fraction * n_c) rows of each class to test.
Split stratified_split(const Dataset& ds, double test_fraction,
                       std::uint64_t seed);

// Appends `tail` to `head` (canonical train/test files) and returns the split
// that separates them. Both parts must use the same label ids.
std::pair<Dataset, Split> concat_train_test(const Dataset& head,
                                            const Dataset& tail);

enum class NormalizeMode { kNone, kMinMax, kZScore };

NormalizeMode parse_normalize_mode(const std::string& name);
std::string to_string(NormalizeMode mode);

// Fits per-feature statistics on `fit_rows` (all rows when empty) and applies
// them to every row. Constant features map to 0.
Dataset normalize(const Dataset& ds, NormalizeMode mode,
                  std::span<const std::size_t> fit_rows = {});

struct PartitionedDataset {
  std::vector<std::vector<std::size_t>> shards;
  std::vector<std::size_t> test;
};

// Dirichlet(alpha) label-skew partition of split.train over `clients` shards.
// Empty shards are repaired by moving one sample from the largest shard.
PartitionedDataset partition_noniid(const Dataset& ds, const Split& split,
                                    std::size_t clients, double alpha,
                                    std::uint64_t seed);

struct SyntheticSpec {
  std::size_t informative = 20;
  std::size_t noise = 480;
  std::size_t samples = 2000;
  std::size_t classes = 2;
  double separation = 0.2;
  std::uint64_t seed = 1;
};

// Informative columns are class-conditional unit Gaussians whose class means
// differ by +/- separation per feature; noise columns are i.i.d. N(0, 1) and
// label-independent. Column positions are shuffled; the informative ones are
// recorded in Dataset::informative.
Dataset generate_synthetic(const SyntheticSpec& spec);

// Copy restricted to the given columns, in the given order.
Dataset select_columns(const Dataset& ds, std::span<const std::size_t> columns);

// Gathers rows into a contiguous batch.
Matrix gather_rows(const Dataset& ds, std::span<const std::size_t> rows);
std::vector<int> gather_labels(const Dataset& ds,
                               std::span<const std::size_t> rows);

}  // namespace dsffs

#endif  // DSFFS_CORE_DATA_PIPELINE_HPP_
