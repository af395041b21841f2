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

#include "experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace dsffs {

namespace {

using Json = nlohmann::json;

//-----------------------------------------------------------------------
//   Value parsing
//-----------------------------------------------------------------------

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (text.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return value;
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  std::uint64_t value = 0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (text.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text +
                      "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<std::size_t> parse_size_list(const std::string& key,
                                         const std::string& text) {
  std::vector<std::size_t> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(static_cast<std::size_t>(parse_uint(key, trim(item))));
  }
  return out;
}

std::string join(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k > 0) out += ",";
    out += std::to_string(values[k]);
  }
  return out;
}

Activation parse_activation(const std::string& text) {
  if (text == "relu") return Activation::kRelu;
  if (text == "tanh") return Activation::kTanh;
  throw ConfigError("activation: expected relu or tanh, got '" + text + "'");
}

std::string to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}

//-----------------------------------------------------------------------
//   Key tables
//-----------------------------------------------------------------------

struct FedKey {
  std::function<void(FedConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const FedConfig&)> get;
};

template <typename T>
FedKey size_key(T FedConfig::*field) {
  return {[field](FedConfig& c, const std::string& k, const std::string& v) {
            c.*field = static_cast<T>(parse_uint(k, v));
          },
          [field](const FedConfig& c) { return std::to_string(c.*field); }};
}

FedKey real_key(double FedConfig::*field) {
  return {[field](FedConfig& c, const std::string& k, const std::string& v) {
            c.*field = parse_double(k, v);
          },
          [field](const FedConfig& c) { return format_double(c.*field); }};
}

const std::map<std::string, FedKey>& fed_keys() {
  static const std::map<std::string, FedKey> keys = {
      {"hidden",
       {[](FedConfig& c, const std::string& k, const std::string& v) {
          c.hidden = parse_size_list(k, v);
        },
        [](const FedConfig& c) { return join(c.hidden); }}},
      {"activation",
       {[](FedConfig& c, const std::string&, const std::string& v) {
          c.activation = parse_activation(v);
        },
        [](const FedConfig& c) { return to_string(c.activation); }}},
      {"feature_selection",
       {[](FedConfig& c, const std::string& k, const std::string& v) {
          c.feature_selection = parse_bool(k, v);
        },
        [](const FedConfig& c) {
          return std::string(c.feature_selection ? "true" : "false");
        }}},
      {"sparsity", real_key(&FedConfig::sparsity)},
      {"features", size_key(&FedConfig::features)},
      {"zeta", real_key(&FedConfig::zeta)},
      {"beta", real_key(&FedConfig::beta)},
      {"clients", size_key(&FedConfig::clients)},
      {"clients_per_round", size_key(&FedConfig::clients_per_round)},
      {"local_epochs", size_key(&FedConfig::local_epochs)},
      {"rounds", size_key(&FedConfig::rounds)},
      {"batch_size", size_key(&FedConfig::batch_size)},
      {"lr", real_key(&FedConfig::lr)},
      {"momentum", real_key(&FedConfig::momentum)},
      {"weight_decay", real_key(&FedConfig::weight_decay)},
      {"mu", real_key(&FedConfig::mu)},
      {"adjust_rate", real_key(&FedConfig::adjust_rate)},
      {"adjust_interval", size_key(&FedConfig::adjust_interval)},
      {"seed", size_key(&FedConfig::seed)},
      {"workers", size_key(&FedConfig::workers)},
  };
  return keys;
}

constexpr const char* kOverridePrefix = "dsffs.";

// Settings that change how a run executes but not what it computes.
bool execution_only(const std::string& key) {
  return key == "workers" || key == "out_dir";
}

//-----------------------------------------------------------------------
//   Output helpers
//-----------------------------------------------------------------------

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

std::filesystem::path make_out_dir(const std::string& dir) {
  std::filesystem::path path(dir);
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) {
    throw DataError("cannot create output directory " + dir + ": " +
                    ec.message());
  }
  return path;
}

std::string metrics_csv(const std::vector<RoundMetrics>& metrics) {
  std::string out =
      "round,accuracy,cumulative_flops,cumulative_upload_bits,"
      "connected_input_neurons,global_nnz,cumulative_download_bits,"
      "client_drift\n";
  char line[512];
  for (const auto& m : metrics) {
    std::snprintf(line, sizeof(line), "%zu,%.6f,%llu,%llu,%zu,%zu,%llu,%.9e\n",
                  m.round, m.test_accuracy,
                  static_cast<unsigned long long>(m.cumulative_flops),
                  static_cast<unsigned long long>(m.cumulative_upload_bits),
                  m.connected_input_neurons, m.global_nnz,
                  static_cast<unsigned long long>(m.cumulative_download_bits),
                  m.client_drift);
    out += line;
  }
  return out;
}

Json reproducible_config(const ExperimentConfig& config) {
  Json j = Json::object();
  for (const auto& [key, value] : config_entries(config)) {
    if (!execution_only(key)) j[key] = value;
  }
  return j;
}

RoundCallback progress_logger(const std::string& label, std::size_t rounds) {
  return [label, rounds](const RoundMetrics& m, const ServerState&) {
    if (m.round % 10 == 0 || m.round == rounds) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%s round %zu/%zu accuracy %.4f",
                    label.c_str(), m.round, rounds, m.test_accuracy);
      log_info(buf);
    }
  };
}

std::vector<double> accuracy_curve(const std::vector<RoundMetrics>& metrics) {
  std::vector<double> curve;
  for (const auto& m : metrics) curve.push_back(m.test_accuracy);
  return curve;
}

PreparedData restrict_columns(const PreparedData& prepared,
                              std::span<const std::size_t> columns) {
  PreparedData out;
  out.data = select_columns(prepared.data, columns);
  out.split = prepared.split;
  out.partition = prepared.partition;
  return out;
}

std::map<std::string, std::string> parse_spec_fields(const std::string& body) {
  std::map<std::string, std::string> fields;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("dataset spec: expected key=value, got '" + item + "'");
    }
    const std::string key = trim(item.substr(0, eq));
    if (!fields.emplace(key, trim(item.substr(eq + 1))).second) {
      throw ConfigError("dataset spec: repeated key '" + key + "'");
    }
  }
  return fields;
}

std::string take(std::map<std::string, std::string>& fields,
                 const std::string& key, const std::string& fallback = "") {
  const auto it = fields.find(key);
  if (it == fields.end()) return fallback;
  std::string value = it->second;
  fields.erase(it);
  return value;
}

void reject_leftovers(const std::map<std::string, std::string>& fields,
                      const std::string& kind) {
  if (!fields.empty()) {
    throw ConfigError("dataset spec: unknown " + kind + " key '" +
                      fields.begin()->first + "'");
  }
}

}  // namespace

//-----------------------------------------------------------------------
//   Configuration
//-----------------------------------------------------------------------

void set_config_value(ExperimentConfig& config, const std::string& key,
                      const std::string& value) {
  if (key == "dataset") {
    config.dataset = value;
  } else if (key == "normalize") {
    config.normalize = parse_normalize_mode(value);
  } else if (key == "test_fraction") {
    config.test_fraction = parse_double(key, value);
  } else if (key == "alpha") {
    config.alpha = parse_double(key, value);
  } else if (key == "out_dir") {
    config.out_dir = value;
  } else if (key == "subset_eval") {
    config.subset_eval = parse_bool(key, value);
  } else if (key.rfind(kOverridePrefix, 0) == 0) {
    const std::string inner = key.substr(std::string(kOverridePrefix).size());
    const auto it = fed_keys().find(inner);
    if (it == fed_keys().end() || execution_only(inner)) {
      throw ConfigError("unknown key '" + key + "'");
    }
    FedConfig probe;
    it->second.set(probe, key, value);
    config.dsffs_overrides[inner] = it->second.get(probe);
  } else {
    const auto it = fed_keys().find(key);
    if (it == fed_keys().end()) throw ConfigError("unknown key '" + key + "'");
    it->second.set(config.fed, key, value);
  }
}

ExperimentConfig parse_config(const std::string& text,
                              const std::string& origin) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    if (!seen.insert(key).second) {
      throw ConfigError(where + "key '" + key + "' set twice");
    }
    try {
      set_config_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

bool apply_seed_override(ExperimentConfig& config) {
  const char* env = std::getenv("DSFFS_SEED");
  if (env == nullptr || *env == '\0') return false;
  const std::uint64_t seed = parse_uint("DSFFS_SEED", trim(env));
  const bool changed = seed != config.fed.seed;
  config.fed.seed = seed;
  return changed;
}

std::map<std::string, std::string> config_entries(
    const ExperimentConfig& config) {
  std::map<std::string, std::string> out;
  out["dataset"] = config.dataset;
  out["normalize"] = to_string(config.normalize);
  out["test_fraction"] = format_double(config.test_fraction);
  out["alpha"] = format_double(config.alpha);
  out["out_dir"] = config.out_dir;
  out["subset_eval"] = config.subset_eval ? "true" : "false";
  for (const auto& [key, entry] : fed_keys()) out[key] = entry.get(config.fed);
  for (const auto& [key, value] : config.dsffs_overrides) {
    out[kOverridePrefix + key] = value;
  }
  return out;
}

std::string resolved_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [key, value] : config_entries(config)) {
    out += key + " = " + value + "\n";
  }
  return out;
}

FedConfig dsffs_run_config(const ExperimentConfig& config) {
  FedConfig fed = config.fed;
  for (const auto& [key, value] : config.dsffs_overrides) {
    fed_keys().at(key).set(fed, kOverridePrefix + key, value);
  }
  fed.feature_selection = true;
  return fed;
}

void validate_config(const ExperimentConfig& config) {
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  if (!(config.alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (config.dataset.empty()) throw ConfigError("dataset must be set");
  constexpr std::size_t kUnknownDim = std::numeric_limits<std::size_t>::max();
  config.fed.validate(kUnknownDim);
  if (!config.dsffs_overrides.empty()) {
    try {
      dsffs_run_config(config).validate(kUnknownDim);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("dsffs overrides: ") + e.what());
    }
  }
}

//-----------------------------------------------------------------------
//   Data
//-----------------------------------------------------------------------

LoadedDataset load_dataset_spec(const std::string& spec,
                                std::uint64_t default_seed) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("dataset spec '" + spec +
                      "' must start with csv:, idx:, libsvm: or synthetic:");
  }
  const std::string kind = trim(spec.substr(0, colon));
  const std::string body = trim(spec.substr(colon + 1));
  const bool bare_path = !body.empty() && body.find('=') == std::string::npos;

  LoadedDataset out;
  if (kind == "synthetic") {
    auto fields = parse_spec_fields(body);
    SyntheticSpec s;
    s.seed = default_seed;
    const auto get_size = [&](const char* key, std::size_t fallback) {
      const std::string v = take(fields, key);
      return v.empty() ? fallback
                       : static_cast<std::size_t>(parse_uint(key, v));
    };
    s.informative = get_size("informative", s.informative);
    s.noise = get_size("noise", s.noise);
    s.samples = get_size("samples", s.samples);
    s.classes = get_size("classes", s.classes);
    s.seed = get_size("seed", s.seed);
    const std::string sep = take(fields, "separation");
    if (!sep.empty()) s.separation = parse_double("separation", sep);
    reject_leftovers(fields, kind);
    out.data = generate_synthetic(s);
  } else if (kind == "csv") {
    std::map<std::string, std::string> fields;
    if (bare_path) {
      fields["path"] = body;
    } else {
      fields = parse_spec_fields(body);
    }
    const std::string path = take(fields, "path");
    const std::string label = take(fields, "label");
    reject_leftovers(fields, kind);
    if (path.empty()) throw ConfigError("csv dataset spec needs path=");
    out.data = load_csv(path, label);
  } else if (kind == "libsvm") {
    std::map<std::string, std::string> fields;
    if (bare_path) {
      fields["path"] = body;
    } else {
      fields = parse_spec_fields(body);
    }
    const std::string path = take(fields, "path");
    const std::string features = take(fields, "features");
    reject_leftovers(fields, kind);
    if (path.empty()) throw ConfigError("libsvm dataset spec needs path=");
    out.data = load_libsvm(
        path, features.empty()
                  ? 0
                  : static_cast<std::size_t>(parse_uint("features", features)));
  } else if (kind == "idx") {
    auto fields = parse_spec_fields(body);
    const std::string images = take(fields, "path");
    const std::string labels = take(fields, "labels");
    const std::string test_images = take(fields, "test_path");
    const std::string test_labels = take(fields, "test_labels");
    reject_leftovers(fields, kind);
    if (images.empty() || labels.empty()) {
      throw ConfigError("idx dataset spec needs path= and labels=");
    }
    if (test_images.empty() != test_labels.empty()) {
      throw ConfigError("idx dataset spec needs both test_path= and test_labels=");
    }
    Dataset train = load_idx(images, labels);
    if (!test_images.empty()) {
      auto [joined, split] =
          concat_train_test(train, load_idx(test_images, test_labels));
      out.data = std::move(joined);
      out.canonical_split = std::move(split);
    } else {
      out.data = std::move(train);
    }
  } else {
    throw ConfigError("unknown dataset kind '" + kind + "'");
  }
  out.data.name = spec;
  return out;
}

PreparedData prepare_data(const ExperimentConfig& config) {
  return prepare_data(config, load_dataset_spec(config.dataset, config.fed.seed));
}

PreparedData prepare_data(const ExperimentConfig& config, LoadedDataset loaded) {
  PreparedData out;
  out.split = loaded.canonical_split
                  ? *loaded.canonical_split
                  : stratified_split(loaded.data, config.test_fraction,
                                     config.fed.seed);
  out.data = normalize(loaded.data, config.normalize, out.split.train);
  out.partition = partition_noniid(out.data, out.split, config.fed.clients,
                                   config.alpha, config.fed.seed);
  return out;
}

std::vector<std::size_t> random_columns(std::size_t dim, std::size_t k,
                                        std::uint64_t seed) {
  if (k > dim) throw ConfigError("cannot draw more columns than exist");
  std::vector<std::size_t> all(dim);
  std::iota(all.begin(), all.end(), 0);
  Rng rng = make_rng(seed, 0xc01);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

double subset_accuracy(const ExperimentConfig& config,
                       const PreparedData& prepared,
                       std::span<const std::size_t> columns) {
  if (columns.empty()) throw ConfigError("empty feature subset");
  const PreparedData restricted = restrict_columns(prepared, columns);
  FedConfig fed = config.fed;
  fed.feature_selection = false;
  fed.features = columns.size();
  const auto result = run_training(fed, restricted.data, restricted.partition);
  return result.metrics.empty() ? 0.0 : result.metrics.back().test_accuracy;
}

//-----------------------------------------------------------------------
//   Workflows
//-----------------------------------------------------------------------

RunSummary run_experiment(const ExperimentConfig& config,
                          const std::string& out_dir) {
  validate_config(config);
  const PreparedData prepared = prepare_data(config);
  config.fed.validate(prepared.data.dim());

  RunSummary summary;
  summary.training =
      run_training(config.fed, prepared.data, prepared.partition,
                   progress_logger("run", config.fed.rounds));
  summary.feature_names = prepared.data.feature_names;
  const auto& selection = summary.training.features;

  if (config.subset_eval) {
    SubsetEvaluation eval;
    const std::size_t k = selection.indices.size();
    eval.random_features =
        random_columns(prepared.data.dim(), k, config.fed.seed);
    eval.selected_accuracy = subset_accuracy(config, prepared, selection.indices);
    eval.random_accuracy =
        subset_accuracy(config, prepared, eval.random_features);
    summary.subset = std::move(eval);
  }

  if (out_dir.empty()) return summary;
  const auto dir = make_out_dir(out_dir);
  write_text(dir / "config.resolved", resolved_config(config));
  write_text(dir / "metrics.csv", metrics_csv(summary.training.metrics));

  Json features = Json::array();
  for (std::size_t n = 0; n < selection.indices.size(); ++n) {
    const std::size_t idx = selection.indices[n];
    Json f = {{"rank", n + 1}, {"index", idx}, {"strength", selection.strengths[n]}};
    if (idx < summary.feature_names.size()) f["name"] = summary.feature_names[idx];
    features.push_back(std::move(f));
  }
  const auto& last = summary.training.metrics.back();
  Json manifest = {
      {"k", config.fed.feature_selection ? config.fed.features
                                         : prepared.data.dim()},
      {"selected", selection.indices.size()},
      {"complete", selection.complete},
      {"seed", config.fed.seed},
      {"features", std::move(features)},
      {"config", reproducible_config(config)},
      {"final_accuracy", last.test_accuracy},
      {"connected_input_neurons", last.connected_input_neurons},
      {"cumulative_download_bits", last.cumulative_download_bits},
  };
  write_text(dir / "selected_features.json", manifest.dump(2) + "\n");

  if (summary.subset) {
    const auto& eval = *summary.subset;
    Json report = {
        {"selected_features", selection.indices},
        {"selected_accuracy", eval.selected_accuracy},
        {"random_features", eval.random_features},
        {"random_accuracy", eval.random_accuracy},
        {"seed", config.fed.seed},
    };
    write_text(dir / "subset_eval.json", report.dump(2) + "\n");
  }
  return summary;
}

Figure1Summary run_figure1(const ExperimentConfig& config,
                           const std::string& out_dir) {
  validate_config(config);
  LoadedDataset loaded = load_dataset_spec(config.dataset, config.fed.seed);
  if (loaded.data.informative.empty()) {
    throw ConfigError("figure1 needs a synthetic dataset (dataset = synthetic:...)");
  }
  const PreparedData noisy = prepare_data(config, std::move(loaded));
  const PreparedData informative =
      restrict_columns(noisy, noisy.data.informative);

  FedConfig baseline = config.fed;
  baseline.feature_selection = false;
  const FedConfig selection = dsffs_run_config(config);
  selection.validate(noisy.data.dim());

  Figure1Summary out;
  out.informative = noisy.data.informative;
  std::sort(out.informative.begin(), out.informative.end());
  const std::size_t rounds = baseline.rounds;
  out.informative_curve = accuracy_curve(
      run_training(baseline, informative.data, informative.partition,
                   progress_logger("informative-only", rounds))
          .metrics);
  out.noisy_curve = accuracy_curve(
      run_training(baseline, noisy.data, noisy.partition,
                   progress_logger("noisy", rounds))
          .metrics);
  const TrainingResult fs =
      run_training(selection, noisy.data, noisy.partition,
                   progress_logger("dsffs", selection.rounds));
  out.dsffs_curve = accuracy_curve(fs.metrics);
  out.selected = fs.features.indices;

  std::vector<std::size_t> sorted_selected = out.selected;
  std::sort(sorted_selected.begin(), sorted_selected.end());
  std::vector<std::size_t> hit;
  std::set_intersection(sorted_selected.begin(), sorted_selected.end(),
                        out.informative.begin(), out.informative.end(),
                        std::back_inserter(hit));
  out.recovery = static_cast<double>(hit.size()) /
                 static_cast<double>(out.informative.size());

  if (out_dir.empty()) return out;
  const auto dir = make_out_dir(out_dir);
  write_text(dir / "config.resolved", resolved_config(config));

  std::string csv = "round,informative_only,noisy,dsffs_selection\n";
  const std::size_t n = std::max(
      {out.informative_curve.size(), out.noisy_curve.size(), out.dsffs_curve.size()});
  const auto cell = [](const std::vector<double>& curve, std::size_t r) {
    if (r >= curve.size()) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", curve[r]);
    return std::string(buf);
  };
  for (std::size_t r = 0; r < n; ++r) {
    csv += std::to_string(r + 1) + "," + cell(out.informative_curve, r) + "," +
           cell(out.noisy_curve, r) + "," + cell(out.dsffs_curve, r) + "\n";
  }
  write_text(dir / "figure1.csv", csv);

  Json report = {
      {"informative_features", out.informative},
      {"selected_features", out.selected},
      {"recovered_features", hit},
      {"recovery_fraction", out.recovery},
      {"final_accuracy",
       {{"informative_only", out.informative_curve.back()},
        {"noisy", out.noisy_curve.back()},
        {"dsffs_selection", out.dsffs_curve.back()}}},
      {"k", selection.features},
      {"seed", config.fed.seed},
      {"config", reproducible_config(config)},
  };
  write_text(dir / "figure1_report.json", report.dump(2) + "\n");
  return out;
}

PartitionRequest parse_partition_request(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  if (parts.size() != 3) {
    throw ConfigError("--partition expects M,alpha,seed, got '" + text + "'");
  }
  PartitionRequest req;
  req.clients = static_cast<std::size_t>(parse_uint("M", parts[0]));
  req.alpha = parse_double("alpha", parts[1]);
  req.seed = parse_uint("seed", parts[2]);
  return req;
}

std::string inspect_dataset(const std::string& spec,
                            const std::optional<PartitionRequest>& partition,
                            double test_fraction) {
  const std::uint64_t seed = partition ? partition->seed : 1;
  LoadedDataset loaded = load_dataset_spec(spec, seed);
  const Dataset& ds = loaded.data;
  std::ostringstream out;
  const auto histogram = [](const std::vector<std::size_t>& h) {
    std::string s;
    for (std::size_t c = 0; c < h.size(); ++c) {
      if (c > 0) s += " ";
      s += std::to_string(c) + ":" + std::to_string(h[c]);
    }
    return s;
  };
  out << "dataset: " << spec << "\n";
  out << "N: " << ds.size() << "\n";
  out << "D: " << ds.dim() << "\n";
  out << "C: " << ds.num_classes << "\n";
  out << "class_histogram: " << histogram(ds.class_histogram()) << "\n";
  if (!ds.informative.empty()) {
    std::vector<std::size_t> inf = ds.informative;
    std::sort(inf.begin(), inf.end());
    out << "informative_columns: " << join(inf) << "\n";
  }
  if (!partition) return out.str();

  const Split split = loaded.canonical_split
                          ? *loaded.canonical_split
                          : stratified_split(ds, test_fraction, partition->seed);
  const PartitionedDataset parts = partition_noniid(
      ds, split, partition->clients, partition->alpha, partition->seed);
  out << "partition: M=" << partition->clients
      << " alpha=" << format_double(partition->alpha)
      << " seed=" << partition->seed << "\n";
  out << "train_N: " << split.train.size() << "\n";
  out << "test_N: " << split.test.size() << "\n";
  std::size_t total = 0;
  for (std::size_t m = 0; m < parts.shards.size(); ++m) {
    total += parts.shards[m].size();
    out << "shard " << m << ": size=" << parts.shards[m].size()
        << " classes=" << histogram(ds.class_histogram(parts.shards[m])) << "\n";
  }
  out << "shard_total: " << total << "\n";
  return out.str();
}

}  // namespace dsffs
