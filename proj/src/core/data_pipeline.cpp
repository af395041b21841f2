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

#include "data_pipeline.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace dsffs {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double* out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE) return false;
  *out = v;
  return true;
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) fields.push_back(trim(field));
  if (!line.empty() && line.back() == sep) fields.emplace_back();
  return fields;
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

// Maps raw labels to dense ids in sorted order.
std::vector<int> densify_labels(const std::vector<std::string>& raw,
                                std::size_t* num_classes) {
  bool numeric = true;
  std::vector<double> values(raw.size());
  for (std::size_t k = 0; k < raw.size() && numeric; ++k) {
    numeric = parse_double(raw[k], &values[k]);
  }
  std::vector<int> y(raw.size());
  if (numeric) {
    std::map<double, int> ids;
    for (double v : values) ids.emplace(v, 0);
    int next = 0;
    for (auto& [v, id] : ids) id = next++;
    for (std::size_t k = 0; k < raw.size(); ++k) y[k] = ids[values[k]];
    *num_classes = ids.size();
  } else {
    std::map<std::string, int> ids;
    for (const auto& s : raw) ids.emplace(s, 0);
    int next = 0;
    for (auto& [s, id] : ids) id = next++;
    for (std::size_t k = 0; k < raw.size(); ++k) y[k] = ids[raw[k]];
    *num_classes = ids.size();
  }
  return y;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw DataError(path + ": truncated IDX header");
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::ifstream open_input(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

}  // namespace

std::vector<std::size_t> Dataset::class_histogram() const {
  std::vector<std::size_t> h(num_classes, 0);
  for (int label : y) ++h[static_cast<std::size_t>(label)];
  return h;
}

std::vector<std::size_t> Dataset::class_histogram(
    std::span<const std::size_t> rows) const {
  std::vector<std::size_t> h(num_classes, 0);
  for (std::size_t r : rows) ++h[static_cast<std::size_t>(y[r])];
  return h;
}

DataFormat parse_data_format(const std::string& name) {
  if (name == "csv") return DataFormat::kCsv;
  if (name == "idx") return DataFormat::kIdx;
  if (name == "libsvm") return DataFormat::kLibsvm;
  throw ConfigError("unknown dataset format '" + name + "'");
}

//-----------------------------------------------------------------------
//   CSV
//-----------------------------------------------------------------------

Dataset load_csv(const std::string& path, const std::string& label_column) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto header = split_fields(line, ',');
  std::size_t label_pos = header.size() - 1;
  if (!label_column.empty()) {
    const auto it = std::find(header.begin(), header.end(), label_column);
    if (it == header.end()) {
      throw DataError(path + ": label column '" + label_column + "' not found");
    }
    label_pos = static_cast<std::size_t>(it - header.begin());
  }
  if (header.size() < 2) {
    throw DataError(path + ": need at least one feature and a label column");
  }

  Dataset ds;
  ds.name = stem_of(path);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_pos) ds.feature_names.push_back(header[c]);
  }
  const std::size_t dim = header.size() - 1;
  std::vector<double> values;
  std::vector<std::string> raw_labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, ',');
    if (fields.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_pos) {
        if (fields[c].empty()) {
          throw DataError(path + ":" + std::to_string(line_no) +
                          ": missing label");
        }
        raw_labels.push_back(fields[c]);
        continue;
      }
      double v = 0.0;
      if (!parse_double(fields[c], &v) || !std::isfinite(v)) {
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": bad value '" + fields[c] + "' in column '" +
                        header[c] + "'");
      }
      values.push_back(v);
    }
  }
  ds.x.rows = raw_labels.size();
  ds.x.cols = dim;
  ds.x.data = std::move(values);
  ds.y = densify_labels(raw_labels, &ds.num_classes);
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (std::size_t c = 0; c < ds.dim(); ++c) {
    out << (c < ds.feature_names.size() ? ds.feature_names[c]
                                        : "f" + std::to_string(c))
        << ',';
  }
  out << "label\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const double* row = ds.x.row(r);
    for (std::size_t c = 0; c < ds.dim(); ++c) out << format_double(row[c]) << ',';
    out << ds.y[r] << '\n';
  }
}

//-----------------------------------------------------------------------
//   IDX
//-----------------------------------------------------------------------

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
  auto images = open_input(images_path, true);
  auto labels = open_input(labels_path, true);
  const std::uint32_t image_magic = read_be32(images, images_path);
  if (image_magic != 0x00000803) {
    throw DataError(images_path + ": bad image magic");
  }
  const std::uint32_t n = read_be32(images, images_path);
  const std::uint32_t rows = read_be32(images, images_path);
  const std::uint32_t cols = read_be32(images, images_path);
  const std::uint32_t label_magic = read_be32(labels, labels_path);
  if (label_magic != 0x00000801) {
    throw DataError(labels_path + ": bad label magic");
  }
  const std::uint32_t n_labels = read_be32(labels, labels_path);
  if (n_labels != n) {
    throw DataError(labels_path + ": " + std::to_string(n_labels) +
                    " labels for " + std::to_string(n) + " images");
  }

  Dataset ds;
  ds.name = stem_of(images_path);
  const std::size_t dim = std::size_t{rows} * cols;
  ds.x = Matrix(n, dim);
  std::vector<unsigned char> buf(dim);
  for (std::size_t r = 0; r < n; ++r) {
    if (!images.read(reinterpret_cast<char*>(buf.data()),
                     static_cast<std::streamsize>(dim))) {
      throw DataError(images_path + ": truncated at image " + std::to_string(r));
    }
    double* row = ds.x.row(r);
    for (std::size_t c = 0; c < dim; ++c) row[c] = buf[c];
  }
  std::vector<unsigned char> raw(n);
  if (!labels.read(reinterpret_cast<char*>(raw.data()),
                   static_cast<std::streamsize>(n))) {
    throw DataError(labels_path + ": truncated label data");
  }
  std::vector<std::string> raw_labels;
  raw_labels.reserve(n);
  for (unsigned char v : raw) raw_labels.push_back(std::to_string(v));
  ds.y = densify_labels(raw_labels, &ds.num_classes);
  return ds;
}

void write_idx(const Dataset& ds, const std::string& images_path,
               const std::string& labels_path, std::size_t image_rows,
               std::size_t image_cols) {
  if (image_rows * image_cols != ds.dim()) {
    throw std::invalid_argument("image shape does not match dataset width");
  }
  std::ofstream images(images_path, std::ios::binary);
  std::ofstream labels(labels_path, std::ios::binary);
  if (!images || !labels) throw DataError("cannot write IDX files");
  write_be32(images, 0x00000803);
  write_be32(images, static_cast<std::uint32_t>(ds.size()));
  write_be32(images, static_cast<std::uint32_t>(image_rows));
  write_be32(images, static_cast<std::uint32_t>(image_cols));
  for (double v : ds.x.data) {
    const double clamped = std::clamp(std::round(v), 0.0, 255.0);
    images.put(static_cast<char>(static_cast<unsigned char>(clamped)));
  }
  write_be32(labels, 0x00000801);
  write_be32(labels, static_cast<std::uint32_t>(ds.size()));
  for (int label : ds.y) {
    labels.put(static_cast<char>(static_cast<unsigned char>(label)));
  }
}

//-----------------------------------------------------------------------
//   libsvm
//-----------------------------------------------------------------------

Dataset load_libsvm(const std::string& path, std::size_t num_features) {
  auto in = open_input(path);
  struct Entry {
    std::size_t col;
    double value;
  };
  std::vector<std::vector<Entry>> rows;
  std::vector<std::string> raw_labels;
  std::size_t max_col = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    std::string label;
    if (!(tokens >> label)) continue;
    std::vector<Entry> entries;
    std::string tok;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      double idx = 0.0, v = 0.0;
      if (colon == std::string::npos || !parse_double(tok.substr(0, colon), &idx) ||
          !parse_double(tok.substr(colon + 1), &v) || idx < 1.0 ||
          idx != std::floor(idx) || !std::isfinite(v)) {
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": bad entry '" + tok + "'");
      }
      const auto col = static_cast<std::size_t>(idx) - 1;
      max_col = std::max(max_col, col + 1);
      entries.push_back({col, v});
    }
    rows.push_back(std::move(entries));
    raw_labels.push_back(label);
  }
  const std::size_t dim = num_features > 0 ? num_features : max_col;
  if (max_col > dim) {
    throw DataError(path + ": feature index " + std::to_string(max_col) +
                    " exceeds declared dimension " + std::to_string(dim));
  }
  Dataset ds;
  ds.name = stem_of(path);
  ds.x = Matrix(rows.size(), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& e : rows[r]) ds.x(r, e.col) = e.value;
  }
  ds.y = densify_labels(raw_labels, &ds.num_classes);
  return ds;
}

void write_libsvm(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out << ds.y[r];
    const double* row = ds.x.row(r);
    for (std::size_t c = 0; c < ds.dim(); ++c) {
      if (row[c] != 0.0) out << ' ' << (c + 1) << ':' << format_double(row[c]);
    }
    out << '\n';
  }
}

//-----------------------------------------------------------------------
//   Splits and normalization
//-----------------------------------------------------------------------

Split stratified_split(const Dataset& ds, double test_fraction,
                       std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in [0, 1)");
  }
  Rng rng = make_rng(seed, 0x5911);
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    by_class[static_cast<std::size_t>(ds.y[r])].push_back(r);
  }
  Split split;
  for (auto& rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(rows.size())));
    split.test.insert(split.test.end(), rows.begin(), rows.begin() + n_test);
    split.train.insert(split.train.end(), rows.begin() + n_test, rows.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::pair<Dataset, Split> concat_train_test(const Dataset& head,
                                            const Dataset& tail) {
  if (head.dim() != tail.dim()) {
    throw DataError("train and test files differ in feature count");
  }
  Dataset ds = head;
  ds.x.rows += tail.x.rows;
  ds.x.data.insert(ds.x.data.end(), tail.x.data.begin(), tail.x.data.end());
  ds.y.insert(ds.y.end(), tail.y.begin(), tail.y.end());
  ds.num_classes = std::max(head.num_classes, tail.num_classes);
  Split split;
  split.train.resize(head.size());
  std::iota(split.train.begin(), split.train.end(), 0);
  split.test.resize(tail.size());
  std::iota(split.test.begin(), split.test.end(), head.size());
  return {std::move(ds), std::move(split)};
}

NormalizeMode parse_normalize_mode(const std::string& name) {
  if (name == "none") return NormalizeMode::kNone;
  if (name == "minmax") return NormalizeMode::kMinMax;
  if (name == "zscore") return NormalizeMode::kZScore;
  throw ConfigError("unknown normalization '" + name + "'");
}

std::string to_string(NormalizeMode mode) {
  switch (mode) {
    case NormalizeMode::kNone:
      return "none";
    case NormalizeMode::kMinMax:
      return "minmax";
    case NormalizeMode::kZScore:
      return "zscore";
  }
  return "none";
}

Dataset normalize(const Dataset& ds, NormalizeMode mode,
                  std::span<const std::size_t> fit_rows) {
  Dataset out = ds;
  if (mode == NormalizeMode::kNone || ds.size() == 0) return out;
  std::vector<std::size_t> all;
  if (fit_rows.empty()) {
    all.resize(ds.size());
    std::iota(all.begin(), all.end(), 0);
    fit_rows = all;
  }
  const std::size_t dim = ds.dim();
  std::vector<double> offset(dim, 0.0), scale(dim, 0.0);
  if (mode == NormalizeMode::kMinMax) {
    std::vector<double> lo(dim, INFINITY), hi(dim, -INFINITY);
    for (std::size_t r : fit_rows) {
      const double* row = ds.x.row(r);
      for (std::size_t c = 0; c < dim; ++c) {
        lo[c] = std::min(lo[c], row[c]);
        hi[c] = std::max(hi[c], row[c]);
      }
    }
    for (std::size_t c = 0; c < dim; ++c) {
      offset[c] = lo[c];
      scale[c] = hi[c] > lo[c] ? 1.0 / (hi[c] - lo[c]) : 0.0;
    }
  } else {
    const double n = static_cast<double>(fit_rows.size());
    std::vector<double> mean(dim, 0.0), var(dim, 0.0);
    for (std::size_t r : fit_rows) {
      const double* row = ds.x.row(r);
      for (std::size_t c = 0; c < dim; ++c) mean[c] += row[c];
    }
    for (double& m : mean) m /= n;
    for (std::size_t r : fit_rows) {
      const double* row = ds.x.row(r);
      for (std::size_t c = 0; c < dim; ++c) {
        const double d = row[c] - mean[c];
        var[c] += d * d;
      }
    }
    for (std::size_t c = 0; c < dim; ++c) {
      const double sd = std::sqrt(var[c] / n);
      offset[c] = mean[c];
      // Relative threshold so float noise in a constant column is not blown
      // up to unit variance.
      scale[c] = sd > 1e-12 * std::max(1.0, std::fabs(mean[c])) ? 1.0 / sd : 0.0;
    }
  }
  for (std::size_t r = 0; r < out.size(); ++r) {
    double* row = out.x.row(r);
    for (std::size_t c = 0; c < dim; ++c) {
      row[c] = (row[c] - offset[c]) * scale[c];
    }
  }
  return out;
}

//-----------------------------------------------------------------------
//   Partitioning
//-----------------------------------------------------------------------

PartitionedDataset partition_noniid(const Dataset& ds, const Split& split,
                                    std::size_t clients, double alpha,
                                    std::uint64_t seed) {
  if (clients < 2) throw ConfigError("need at least 2 clients");
  if (!(alpha > 0.0)) throw ConfigError("Dirichlet alpha must be positive");
  if (clients > split.train.size()) {
    throw ConfigError(std::to_string(clients) + " clients for " +
                      std::to_string(split.train.size()) + " training samples");
  }
  Rng rng = make_rng(seed, 0xd1c7);
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t r : split.train) {
    by_class[static_cast<std::size_t>(ds.y[r])].push_back(r);
  }

  PartitionedDataset out;
  out.shards.resize(clients);
  out.test = split.test;
  std::gamma_distribution<double> gamma(alpha, 1.0);
  for (auto& rows : by_class) {
    if (rows.empty()) continue;
    std::shuffle(rows.begin(), rows.end(), rng);
    std::vector<double> p(clients);
    double total = 0.0;
    for (double& v : p) {
      v = gamma(rng);
      total += v;
    }
    if (!(total > 0.0)) {
      std::fill(p.begin(), p.end(), 1.0);
      total = static_cast<double>(clients);
    }
    double cumulative = 0.0;
    std::size_t begin = 0;
    for (std::size_t m = 0; m < clients; ++m) {
      cumulative += p[m] / total;
      const std::size_t end =
          m + 1 == clients
              ? rows.size()
              : std::min(rows.size(),
                         static_cast<std::size_t>(std::llround(
                             cumulative * static_cast<double>(rows.size()))));
      for (std::size_t k = begin; k < std::max(begin, end); ++k) {
        out.shards[m].push_back(rows[k]);
      }
      begin = std::max(begin, end);
    }
  }

  for (std::size_t m = 0; m < clients; ++m) {
    if (!out.shards[m].empty()) continue;
    std::size_t largest = 0;
    for (std::size_t k = 1; k < clients; ++k) {
      if (out.shards[k].size() > out.shards[largest].size()) largest = k;
    }
    out.shards[m].push_back(out.shards[largest].back());
    out.shards[largest].pop_back();
  }
  for (auto& shard : out.shards) std::sort(shard.begin(), shard.end());
  return out;
}

//-----------------------------------------------------------------------
//   Synthetic data
//-----------------------------------------------------------------------

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.informative == 0 || spec.samples == 0 || spec.classes < 2) {
    throw ConfigError(
        "synthetic data needs >= 1 informative feature, >= 1 sample and >= 2 "
        "classes");
  }
  Rng rng = make_rng(spec.seed, 0x5e7);
  const std::size_t dim = spec.informative + spec.noise;

  std::vector<std::size_t> columns(dim);
  std::iota(columns.begin(), columns.end(), 0);
  std::shuffle(columns.begin(), columns.end(), rng);
  std::vector<std::size_t> informative(columns.begin(),
                                       columns.begin() + spec.informative);

  // Class means: +/- separation, and never identical across all classes.
  std::bernoulli_distribution coin(0.5);
  std::vector<std::vector<double>> means(
      spec.classes, std::vector<double>(spec.informative, 0.0));
  for (std::size_t f = 0; f < spec.informative; ++f) {
    if (spec.classes == 2) {
      const double s = coin(rng) ? 1.0 : -1.0;
      means[0][f] = s * spec.separation;
      means[1][f] = -s * spec.separation;
      continue;
    }
    bool all_same = true;
    for (std::size_t c = 0; c < spec.classes; ++c) {
      means[c][f] = coin(rng) ? spec.separation : -spec.separation;
      if (c > 0 && means[c][f] != means[0][f]) all_same = false;
    }
    if (all_same) {
      std::uniform_int_distribution<std::size_t> pick(0, spec.classes - 1);
      means[pick(rng)][f] *= -1.0;
    }
  }

  std::vector<int> labels(spec.samples);
  for (std::size_t r = 0; r < spec.samples; ++r) {
    labels[r] = static_cast<int>(r % spec.classes);
  }
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset ds;
  ds.name = "synthetic";
  ds.x = Matrix(spec.samples, dim);
  ds.y = labels;
  ds.num_classes = spec.classes;
  ds.informative = informative;
  std::sort(ds.informative.begin(), ds.informative.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t r = 0; r < spec.samples; ++r) {
    double* row = ds.x.row(r);
    for (std::size_t c = 0; c < dim; ++c) row[c] = normal(rng);
    const auto& mu = means[static_cast<std::size_t>(labels[r])];
    for (std::size_t f = 0; f < spec.informative; ++f) {
      row[informative[f]] += mu[f];
    }
  }
  for (std::size_t c = 0; c < dim; ++c) {
    ds.feature_names.push_back("f" + std::to_string(c));
  }
  return ds;
}

Dataset select_columns(const Dataset& ds, std::span<const std::size_t> columns) {
  Dataset out;
  out.name = ds.name;
  out.y = ds.y;
  out.num_classes = ds.num_classes;
  out.x = Matrix(ds.size(), columns.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const double* src = ds.x.row(r);
    double* dst = out.x.row(r);
    for (std::size_t k = 0; k < columns.size(); ++k) {
      if (columns[k] >= ds.dim()) {
        throw std::out_of_range("column " + std::to_string(columns[k]));
      }
      dst[k] = src[columns[k]];
    }
  }
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k] < ds.feature_names.size()) {
      out.feature_names.push_back(ds.feature_names[columns[k]]);
    }
    const auto it =
        std::find(ds.informative.begin(), ds.informative.end(), columns[k]);
    if (it != ds.informative.end()) out.informative.push_back(k);
  }
  return out;
}

Matrix gather_rows(const Dataset& ds, std::span<const std::size_t> rows) {
  Matrix batch(rows.size(), ds.dim());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double* src = ds.x.row(rows[k]);
    std::copy(src, src + ds.dim(), batch.row(k));
  }
  return batch;
}

std::vector<int> gather_labels(const Dataset& ds,
                               std::span<const std::size_t> rows) {
  std::vector<int> out(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) out[k] = ds.y[rows[k]];
  return out;
}

}  // namespace dsffs
