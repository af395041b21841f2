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

// Command-line front end. Talks to the library through the C API only.

#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dsffs/dsffs.h"

namespace {

int report_error(dsffs_status status) {
  const char* kind = status == DSFFS_ERROR_CONFIG ? "config error" : "error";
  std::fprintf(stderr, "dsffs: %s: %s\n", kind, dsffs_last_error());
  return status == DSFFS_ERROR_CONFIG ? 2 : 3;
}

struct ConfigHandle {
  dsffs_config* ptr = nullptr;
  ~ConfigHandle() { dsffs_config_free(ptr); }
};

struct ResultHandle {
  dsffs_result* ptr = nullptr;
  ~ResultHandle() { dsffs_result_free(ptr); }
};

using Action = dsffs_status (*)(const dsffs_config*, const char*,
                                dsffs_result**);

int run_with_config(const std::string& path, std::optional<std::size_t> workers,
                    const std::optional<std::string>& out_dir, Action action) {
  ConfigHandle config;
  dsffs_status st = dsffs_config_load(path.c_str(), &config.ptr);
  if (st == DSFFS_OK) st = dsffs_config_apply_env(config.ptr);
  if (st == DSFFS_OK && workers) {
    st = dsffs_config_set(config.ptr, "workers", std::to_string(*workers).c_str());
  }
  if (st == DSFFS_OK && out_dir) {
    st = dsffs_config_set(config.ptr, "out_dir", out_dir->c_str());
  }
  if (st == DSFFS_OK) st = dsffs_config_validate(config.ptr);
  if (st != DSFFS_OK) return report_error(st);

  ResultHandle result;
  st = action(config.ptr, nullptr, &result.ptr);
  if (st != DSFFS_OK) return report_error(st);
  std::fputs(dsffs_result_summary(result.ptr), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic sparse federated feature selection"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(dsffs_version()));

  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Per-round progress on stderr");
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  std::string config_path;
  std::optional<std::size_t> workers;
  std::optional<std::string> out_dir;

  auto* run = app.add_subcommand("run", "Train and select features");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--workers", workers, "Parallel client trainings")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory");

  auto* figure1 =
      app.add_subcommand("figure1", "Informative vs noisy features experiment");
  figure1->add_option("--config", config_path, "Config file")->required();
  figure1->add_option("--workers", workers, "Parallel client trainings")
      ->check(CLI::PositiveNumber);
  figure1->add_option("--out", out_dir, "Output directory");

  std::string dataset;
  std::optional<std::string> partition;
  auto* inspect = app.add_subcommand("inspect", "Describe a dataset");
  inspect->add_option("--dataset", dataset, "Dataset spec")->required();
  inspect->add_option("--partition", partition, "M,alpha,seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  dsffs_set_log_level(quiet     ? DSFFS_LOG_QUIET
                      : verbose ? DSFFS_LOG_INFO
                                : DSFFS_LOG_WARNING);

  if (*run) return run_with_config(config_path, workers, out_dir, dsffs_run);
  if (*figure1) {
    return run_with_config(config_path, workers, out_dir, dsffs_figure1);
  }

  char* report = nullptr;
  const dsffs_status st = dsffs_inspect(
      dataset.c_str(), partition ? partition->c_str() : nullptr, &report);
  if (st != DSFFS_OK) return report_error(st);
  std::fputs(report, stdout);
  dsffs_string_free(report);
  return 0;
}
