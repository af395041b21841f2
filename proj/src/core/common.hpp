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

#ifndef DSFFS_CORE_COMMON_HPP_
#define DSFFS_CORE_COMMON_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsffs {

// Invalid user-facing configuration. Surfaces as exit code 2 in the CLI.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input data (parse failures carry the offending line number).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent generator streams from
// (seed, stream...) tuples so results do not depend on thread scheduling.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0,
                    std::uint64_t sub = 0) {
  return Rng(mix_seed(mix_seed(mix_seed(seed) ^ stream) ^ sub));
}

// Ceiling that ignores floating-point noise below 1e-9 relative, so that
// e.g. 0.65 * 400 (= 260.00000000000003) rounds up to 260, not 261.
inline double robust_ceil(double x) {
  const double tol = 1e-9 * std::max(1.0, std::fabs(x));
  return std::ceil(x - tol);
}

inline double robust_floor(double x) {
  const double tol = 1e-9 * std::max(1.0, std::fabs(x));
  return std::floor(x + tol);
}

// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double* row(std::size_t i) { return data.data() + i * cols; }
};

enum class LogLevel { kQuiet = 0, kWarning = 1, kInfo = 2 };

void set_log_level(LogLevel level);
LogLevel log_level();
void log_warning(const std::string& message);
void log_info(const std::string& message);

}  // namespace dsffs

#endif  // DSFFS_CORE_COMMON_HPP_
