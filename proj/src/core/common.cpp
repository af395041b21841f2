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

#include "common.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace dsffs {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::kWarning)};
std::mutex g_log_mutex;

void emit(const char* tag, const std::string& message) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::fprintf(stderr, "[dsffs %s] %s\n", tag, message.c_str());
}
}  // namespace

void set_log_level(LogLevel level) { g_level = static_cast<int>(level); }

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_warning(const std::string& message) {
  if (g_level.load() >= static_cast<int>(LogLevel::kWarning)) {
    emit("warn", message);
  }
}

void log_info(const std::string& message) {
  if (g_level.load() >= static_cast<int>(LogLevel::kInfo)) {
    emit("info", message);
  }
}

}  // namespace dsffs
