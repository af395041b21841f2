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

// Experiment driver behind the command-line tool: declarative configuration,
// dataset specs, and the run / figure1 / inspect workflows with their output
// files.

#ifndef DSFFS_CORE_EXPERIMENT_HPP_
#define DSFFS_CORE_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "data_pipeline.hpp"
#include "fed_core.hpp"

namespace dsffs {

struct ExperimentConfig {
  // Dataset spec, see load_dataset_spec.
  std::string dataset = "synthetic:";
  NormalizeMode normalize = NormalizeMode::kZScore;
  double test_fraction = 0.2;
  double alpha = 0.5;  // Dirichlet concentration of the label-skew partition
  FedConfig fed;
  std::string out_dir = "dsffs_out";
  // Retrain on the selected K columns and on K random columns after `run`.
  bool subset_eval = false;
  // figure1 only: FedConfig keys overriding `fed` for the DSFFS run.
  std::map<std::string, std::string> dsffs_overrides;
};

// Flat `key = value` text; `#` starts a comment. Unknown keys, repeated keys
// and malformed values raise ConfigError naming the line.
ExperimentConfig parse_config(const std::string& text,
                              const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

// Sets one key with the same parsing rules as a config line.
void set_config_value(ExperimentConfig& config, const std::string& key,
                      const std::string& value);

// Applies DSFFS_SEED when set. Returns true if the seed changed.
bool apply_seed_override(ExperimentConfig& config);

// Every key with its effective value, one `key = value` per line, sorted.
std::string resolved_config(const ExperimentConfig& config);
std::map<std::string, std::string> config_entries(const ExperimentConfig& config);

// Checks every module precondition that can be checked before loading data.
void validate_config(const ExperimentConfig& config);

// FedConfig of the figure1 DSFFS run (feature selection forced on).
FedConfig dsffs_run_config(const ExperimentConfig& config);

// Dataset spec strings:
//   csv:path=FILE[,label=COLUMN]      or csv:FILE
//   idx:path=IMAGES,labels=LABELS[,test_path=IMAGES,test_labels=LABELS]
//   libsvm:path=FILE[,features=D]     or libsvm:FILE
//   synthetic:[informative=20,noise=480,samples=2000,classes=2,
//              separation=0.2,seed=<config seed>]
// A canonical split is present when the spec names separate test files.
struct LoadedDataset {
  Dataset data;
  std::optional<Split> canonical_split;
};
LoadedDataset load_dataset_spec(const std::string& spec,
                                std::uint64_t default_seed = 1);

struct PreparedData {
  Dataset data;  // normalized with train-row statistics
  Split split;
  PartitionedDataset partition;
};
PreparedData prepare_data(const ExperimentConfig& config);
PreparedData prepare_data(const ExperimentConfig& config, LoadedDataset loaded);

// Final test accuracy of a network without feature selection trained on the
// given columns only, with the same federated setup and hidden widths.
double subset_accuracy(const ExperimentConfig& config, const PreparedData& prepared,
                       std::span<const std::size_t> columns);

// K distinct columns drawn uniformly with the given seed, sorted.
std::vector<std::size_t> random_columns(std::size_t dim, std::size_t k,
                                        std::uint64_t seed);

struct SubsetEvaluation {
  double selected_accuracy = 0.0;
  double random_accuracy = 0.0;
  std::vector<std::size_t> random_features;
};

struct RunSummary {
  TrainingResult training;
  std::vector<std::string> feature_names;
  std::optional<SubsetEvaluation> subset;
};

// Trains, then writes metrics.csv, selected_features.json and config.resolved
// (plus subset_eval.json when enabled) into out_dir.
RunSummary run_experiment(const ExperimentConfig& config,
                          const std::string& out_dir);

struct Figure1Summary {
  std::vector<double> informative_curve;
  std::vector<double> noisy_curve;
  std::vector<double> dsffs_curve;
  std::vector<std::size_t> informative;
  std::vector<std::size_t> selected;
  double recovery = 0.0;  // |selected & informative| / |informative|
};

// Runs without feature selection on the informative columns and on all
// columns, then DSFFS on all columns. Writes figure1.csv, figure1_report.json
// and config.resolved into out_dir (skipped when out_dir is empty).
Figure1Summary run_figure1(const ExperimentConfig& config,
                           const std::string& out_dir);

struct PartitionRequest {
  std::size_t clients = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
};
// Parses "M,alpha,seed".
PartitionRequest parse_partition_request(const std::string& text);

// N, D, C and the class histogram; with a partition request also the per-shard
// sizes and class histograms.
std::string inspect_dataset(const std::string& spec,
                            const std::optional<PartitionRequest>& partition,
                            double test_fraction = 0.2);

}  // namespace dsffs

#endif  // DSFFS_CORE_EXPERIMENT_HPP_
