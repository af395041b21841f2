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

#include "dsffs/dsffs.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "experiment.hpp"

struct dsffs_config {
  dsffs::ExperimentConfig value;
};

struct dsffs_result {
  std::vector<dsffs::RoundMetrics> metrics;
  std::vector<std::size_t> features;
  std::vector<double> strengths;
  double recovery = -1.0;
  std::string summary;
};

namespace {

thread_local std::string last_error;

dsffs_status fail(dsffs_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Maps exceptions from the core onto status codes.
template <typename F>
dsffs_status guarded(F&& body) {
  try {
    body();
    return DSFFS_OK;
  } catch (const dsffs::ConfigError& e) {
    return fail(DSFFS_ERROR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DSFFS_ERROR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(DSFFS_ERROR_RUNTIME, e.what());
  } catch (...) {
    return fail(DSFFS_ERROR_RUNTIME, "unknown error");
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string format_summary(const dsffs_result& r) {
  std::string out;
  char line[256];
  if (!r.metrics.empty()) {
    const auto& m = r.metrics.back();
    std::snprintf(line, sizeof(line),
                  "rounds: %zu\nfinal_accuracy: %.4f\n"
                  "connected_input_neurons: %zu\nglobal_nnz: %zu\n"
                  "cumulative_flops: %llu\ncumulative_upload_bits: %llu\n",
                  m.round, m.test_accuracy, m.connected_input_neurons,
                  m.global_nnz, static_cast<unsigned long long>(m.cumulative_flops),
                  static_cast<unsigned long long>(m.cumulative_upload_bits));
    out += line;
  }
  out += "selected_features:";
  for (std::size_t idx : r.features) out += " " + std::to_string(idx);
  out += "\n";
  return out;
}

}  // namespace

extern "C" {

const char* dsffs_version(void) { return "0.1.0"; }

const char* dsffs_last_error(void) { return last_error.c_str(); }

void dsffs_set_log_level(dsffs_log_level level) {
  switch (level) {
    case DSFFS_LOG_QUIET:
      dsffs::set_log_level(dsffs::LogLevel::kQuiet);
      break;
    case DSFFS_LOG_INFO:
      dsffs::set_log_level(dsffs::LogLevel::kInfo);
      break;
    default:
      dsffs::set_log_level(dsffs::LogLevel::kWarning);
  }
}

void dsffs_string_free(char* s) { std::free(s); }

dsffs_status dsffs_config_new(dsffs_config** out) {
  if (out == nullptr) return fail(DSFFS_ERROR_ARGUMENT, "null output pointer");
  return guarded([&] { *out = new dsffs_config{}; });
}

dsffs_status dsffs_config_parse(const char* text, dsffs_config** out) {
  if (text == nullptr || out == nullptr) {
    return fail(DSFFS_ERROR_ARGUMENT, "null argument");
  }
  return guarded([&] { *out = new dsffs_config{dsffs::parse_config(text)}; });
}

dsffs_status dsffs_config_load(const char* path, dsffs_config** out) {
  if (path == nullptr || out == nullptr) {
    return fail(DSFFS_ERROR_ARGUMENT, "null argument");
  }
  return guarded([&] { *out = new dsffs_config{dsffs::load_config(path)}; });
}

dsffs_status dsffs_config_set(dsffs_config* config, const char* key,
                              const char* value) {
  if (config == nullptr || key == nullptr || value == nullptr) {
    return fail(DSFFS_ERROR_ARGUMENT, "null argument");
  }
  return guarded([&] { dsffs::set_config_value(config->value, key, value); });
}

dsffs_status dsffs_config_apply_env(dsffs_config* config) {
  if (config == nullptr) return fail(DSFFS_ERROR_ARGUMENT, "null config");
  return guarded([&] { dsffs::apply_seed_override(config->value); });
}

dsffs_status dsffs_config_validate(const dsffs_config* config) {
  if (config == nullptr) return fail(DSFFS_ERROR_ARGUMENT, "null config");
  return guarded([&] { dsffs::validate_config(config->value); });
}

dsffs_status dsffs_config_get(const dsffs_config* config, const char* key,
                              char** out) {
  if (config == nullptr || out == nullptr) {
    return fail(DSFFS_ERROR_ARGUMENT, "null argument");
  }
  return guarded([&] {
    if (key == nullptr) {
      *out = duplicate(dsffs::resolved_config(config->value));
      return;
    }
    const auto entries = dsffs::config_entries(config->value);
    const auto it = entries.find(key);
    if (it == entries.end()) {
      throw dsffs::ConfigError(std::string("unknown key '") + key + "'");
    }
    *out = duplicate(it->second);
  });
}

void dsffs_config_free(dsffs_config* config) { delete config; }

dsffs_status dsffs_run(const dsffs_config* config, const char* out_dir,
                       dsffs_result** out) {
  if (config == nullptr || out == nullptr) {
    return fail(DSFFS_ERROR_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const std::string dir = out_dir == nullptr ? config->value.out_dir : out_dir;
    auto summary = dsffs::run_experiment(config->value, dir);
    auto result = std::make_unique<dsffs_result>();
    result->metrics = std::move(summary.training.metrics);
    result->features = summary.training.features.indices;
    result->strengths = summary.training.features.strengths;
    result->summary = format_summary(*result);
    if (summary.subset) {
      char line[160];
      std::snprintf(line, sizeof(line),
                    "subset_accuracy_selected: %.4f\n"
                    "subset_accuracy_random: %.4f\n",
                    summary.subset->selected_accuracy,
                    summary.subset->random_accuracy);
      result->summary += line;
    }
    *out = result.release();
  });
}

dsffs_status dsffs_figure1(const dsffs_config* config, const char* out_dir,
                           dsffs_result** out) {
  if (config == nullptr || out == nullptr) {
    return fail(DSFFS_ERROR_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const std::string dir = out_dir == nullptr ? config->value.out_dir : out_dir;
    const auto fig = dsffs::run_figure1(config->value, dir);
    auto result = std::make_unique<dsffs_result>();
    result->features = fig.selected;
    result->recovery = fig.recovery;
    char line[256];
    std::snprintf(line, sizeof(line),
                  "rounds: %zu\nfinal_accuracy_informative_only: %.4f\n"
                  "final_accuracy_noisy: %.4f\nfinal_accuracy_dsffs: %.4f\n"
                  "recovery: %.4f\n",
                  fig.noisy_curve.size(), fig.informative_curve.back(),
                  fig.noisy_curve.back(), fig.dsffs_curve.back(), fig.recovery);
    result->summary = line;
    result->summary += "selected_features:";
    for (std::size_t idx : fig.selected) {
      result->summary += " " + std::to_string(idx);
    }
    result->summary += "\n";
    *out = result.release();
  });
}

dsffs_status dsffs_inspect(const char* dataset_spec, const char* partition,
                           char** report) {
  if (dataset_spec == nullptr || report == nullptr) {
    return fail(DSFFS_ERROR_ARGUMENT, "null argument");
  }
  return guarded([&] {
    std::optional<dsffs::PartitionRequest> req;
    if (partition != nullptr) req = dsffs::parse_partition_request(partition);
    *report = duplicate(dsffs::inspect_dataset(dataset_spec, req));
  });
}

size_t dsffs_result_rounds(const dsffs_result* result) {
  return result == nullptr ? 0 : result->metrics.size();
}

dsffs_status dsffs_result_round(const dsffs_result* result, size_t index,
                                dsffs_round_metrics* out) {
  if (result == nullptr || out == nullptr) {
    return fail(DSFFS_ERROR_ARGUMENT, "null argument");
  }
  if (index >= result->metrics.size()) {
    return fail(DSFFS_ERROR_ARGUMENT, "round index out of range");
  }
  const auto& m = result->metrics[index];
  *out = dsffs_round_metrics{m.round,
                             m.test_accuracy,
                             m.cumulative_flops,
                             m.cumulative_upload_bits,
                             m.cumulative_download_bits,
                             m.connected_input_neurons,
                             m.global_nnz,
                             m.client_drift};
  return DSFFS_OK;
}

size_t dsffs_result_feature_count(const dsffs_result* result) {
  return result == nullptr ? 0 : result->features.size();
}

dsffs_status dsffs_result_feature(const dsffs_result* result, size_t rank,
                                  size_t* index, double* strength) {
  if (result == nullptr) return fail(DSFFS_ERROR_ARGUMENT, "null result");
  if (rank >= result->features.size()) {
    return fail(DSFFS_ERROR_ARGUMENT, "feature rank out of range");
  }
  if (index != nullptr) *index = result->features[rank];
  if (strength != nullptr) {
    *strength = rank < result->strengths.size() ? result->strengths[rank] : 0.0;
  }
  return DSFFS_OK;
}

double dsffs_result_recovery(const dsffs_result* result) {
  return result == nullptr ? -1.0 : result->recovery;
}

const char* dsffs_result_summary(const dsffs_result* result) {
  return result == nullptr ? "" : result->summary.c_str();
}

void dsffs_result_free(dsffs_result* result) { delete result; }

}  // extern "C"
