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

#include <gtest/gtest.h>

#include <cstdlib>
#include <string>

#include "dsffs/dsffs.h"
#include "support/oracles.hpp"

namespace {

const char* kTiny =
    "dataset = synthetic:informative=4,noise=12,samples=120\n"
    "hidden = 8\nfeatures = 6\nclients = 2\nrounds = 2\nlocal_epochs = 1\n"
    "batch_size = 16\nsparsity = 0.5\n";

TEST(CApi, VersionAndDefaults) {
  EXPECT_STRNE(dsffs_version(), "");
  dsffs_config* c = nullptr;
  ASSERT_EQ(dsffs_config_new(&c), DSFFS_OK);
  char* v = nullptr;
  ASSERT_EQ(dsffs_config_get(c, "rounds", &v), DSFFS_OK);
  EXPECT_STREQ(v, "400");
  dsffs_string_free(v);
  ASSERT_EQ(dsffs_config_get(c, nullptr, &v), DSFFS_OK);
  EXPECT_NE(std::string(v).find("zeta = 0.2"), std::string::npos);
  dsffs_string_free(v);
  dsffs_config_free(c);
}

TEST(CApi, ErrorCodesAndMessages) {
  dsffs_config* c = nullptr;
  EXPECT_EQ(dsffs_config_parse("bogus = 1\n", &c), DSFFS_ERROR_CONFIG);
  EXPECT_EQ(c, nullptr);
  EXPECT_NE(std::string(dsffs_last_error()).find("bogus"), std::string::npos);
  EXPECT_EQ(dsffs_config_parse(nullptr, &c), DSFFS_ERROR_ARGUMENT);
  EXPECT_EQ(dsffs_config_validate(nullptr), DSFFS_ERROR_ARGUMENT);

  ASSERT_EQ(dsffs_config_parse(kTiny, &c), DSFFS_OK);
  EXPECT_EQ(dsffs_config_set(c, "clients", "1"), DSFFS_OK);
  EXPECT_EQ(dsffs_config_validate(c), DSFFS_ERROR_CONFIG);
  EXPECT_EQ(dsffs_config_set(c, "clients", "2"), DSFFS_OK);
  EXPECT_EQ(dsffs_config_validate(c), DSFFS_OK);
  char* v = nullptr;
  EXPECT_EQ(dsffs_config_get(c, "nope", &v), DSFFS_ERROR_CONFIG);
  EXPECT_EQ(dsffs_config_set(c, "dataset", "csv:/nonexistent.csv"), DSFFS_OK);
  dsffs_result* r = nullptr;
  EXPECT_EQ(dsffs_run(c, "", &r), DSFFS_ERROR_RUNTIME);
  EXPECT_EQ(r, nullptr);
  dsffs_config_free(c);
}

TEST(CApi, SeedFromEnvironment) {
  dsffs_config* c = nullptr;
  ASSERT_EQ(dsffs_config_parse(kTiny, &c), DSFFS_OK);
  setenv("DSFFS_SEED", "77", 1);
  EXPECT_EQ(dsffs_config_apply_env(c), DSFFS_OK);
  unsetenv("DSFFS_SEED");
  char* v = nullptr;
  ASSERT_EQ(dsffs_config_get(c, "seed", &v), DSFFS_OK);
  EXPECT_STREQ(v, "77");
  dsffs_string_free(v);
  dsffs_config_free(c);
}

TEST(CApi, RunResultAccessors) {
  dsffs_config* c = nullptr;
  ASSERT_EQ(dsffs_config_parse(kTiny, &c), DSFFS_OK);
  dsffs_result* r = nullptr;
  ASSERT_EQ(dsffs_run(c, "", &r), DSFFS_OK) << dsffs_last_error();
  ASSERT_EQ(dsffs_result_rounds(r), 2u);
  dsffs_round_metrics m{};
  ASSERT_EQ(dsffs_result_round(r, 1, &m), DSFFS_OK);
  EXPECT_EQ(m.round, 2u);
  EXPECT_GT(m.cumulative_flops, 0u);
  EXPECT_EQ(dsffs_result_round(r, 2, &m), DSFFS_ERROR_ARGUMENT);
  ASSERT_EQ(dsffs_result_feature_count(r), 6u);
  std::size_t idx = 0;
  double strength = 0.0, prev = 1e300;
  for (std::size_t k = 0; k < 6; ++k) {
    ASSERT_EQ(dsffs_result_feature(r, k, &idx, &strength), DSFFS_OK);
    EXPECT_LT(idx, 16u);
    EXPECT_LE(strength, prev);
    prev = strength;
  }
  EXPECT_LT(dsffs_result_recovery(r), 0.0);
  EXPECT_STRNE(dsffs_result_summary(r), "");
  dsffs_result_free(r);
  dsffs_config_free(c);
}

TEST(CApi, Figure1AndInspect) {
  dsffs_config* c = nullptr;
  ASSERT_EQ(dsffs_config_parse(kTiny, &c), DSFFS_OK);
  dsffs_result* r = nullptr;
  ASSERT_EQ(dsffs_figure1(c, "", &r), DSFFS_OK) << dsffs_last_error();
  const double rec = dsffs_result_recovery(r);
  EXPECT_GE(rec, 0.0);
  EXPECT_LE(rec, 1.0);
  dsffs_result_free(r);
  dsffs_config_free(c);

  char* report = nullptr;
  ASSERT_EQ(dsffs_inspect("synthetic:informative=2,noise=3,samples=30", "3,0.5,1",
                          &report),
            DSFFS_OK);
  EXPECT_NE(std::string(report).find("D: 5"), std::string::npos);
  dsffs_string_free(report);
  EXPECT_EQ(dsffs_inspect("synthetic:", "3,0.5", &report), DSFFS_ERROR_CONFIG);
}

}  // namespace
