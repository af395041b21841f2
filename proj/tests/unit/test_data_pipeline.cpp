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

#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>

#include "data_pipeline.hpp"
#include "support/oracles.hpp"

namespace dsffs {
namespace {

namespace fs = std::filesystem;

Dataset small_dataset() {
  Dataset ds;
  ds.name = "small";
  ds.x = Matrix(6, 3);
  for (std::size_t k = 0; k < ds.x.data.size(); ++k) ds.x.data[k] = 0.25 * k - 1.0;
  ds.y = {0, 1, 2, 0, 1, 2};
  ds.num_classes = 3;
  ds.feature_names = {"a", "b", "c"};
  return ds;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

TEST(Csv, RoundTripPreservesValuesAndLabels) {
  const auto dir = testing::temp_dir("csv");
  const Dataset ds = small_dataset();
  write_csv(ds, (dir / "d.csv").string());
  const Dataset back = load_csv((dir / "d.csv").string());
  EXPECT_EQ(back.x.data, ds.x.data);
  EXPECT_EQ(back.y, ds.y);
  EXPECT_EQ(back.feature_names, ds.feature_names);
  EXPECT_EQ(back.num_classes, 3u);
}

TEST(Csv, NamedLabelColumnAndStringLabels) {
  const auto dir = testing::temp_dir("csv");
  write_text(dir / "d.csv", "cls,x1,x2\ncat,1,2\ndog,3,4\ncat,5,6\n");
  const Dataset ds = load_csv((dir / "d.csv").string(), "cls");
  EXPECT_EQ(ds.dim(), 2u);
  EXPECT_EQ(ds.y, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(ds.x.data, (std::vector<double>{1, 2, 3, 4, 5, 6}));
}

TEST(Csv, NumericLabelsSortNumerically) {
  const auto dir = testing::temp_dir("csv");
  write_text(dir / "d.csv", "x,y\n0,10\n0,9\n0,2\n");
  EXPECT_EQ(load_csv((dir / "d.csv").string()).y, (std::vector<int>{2, 1, 0}));
}

TEST(Csv, ErrorsCarryLineNumbers) {
  const auto dir = testing::temp_dir("csv");
  write_text(dir / "short.csv", "a,b,y\n1,2,0\n1,0\n");
  EXPECT_NE(error_of([&] { load_csv((dir / "short.csv").string()); }).find("short.csv:3"),
            std::string::npos);
  write_text(dir / "bad.csv", "a,y\nfoo,1\n");
  const std::string msg = error_of([&] { load_csv((dir / "bad.csv").string()); });
  EXPECT_NE(msg.find("bad.csv:2"), std::string::npos);
  EXPECT_NE(msg.find("foo"), std::string::npos);
  EXPECT_THROW(load_csv((dir / "missing.csv").string()), DataError);
  EXPECT_THROW(load_csv((dir / "bad.csv").string(), "nope"), DataError);
}

TEST(Idx, RoundTrip) {
  const auto dir = testing::temp_dir("idx");
  Dataset ds;
  ds.x = Matrix(3, 4);
  for (std::size_t k = 0; k < 12; ++k) ds.x.data[k] = static_cast<double>(k * 20);
  ds.y = {2, 0, 1};
  ds.num_classes = 3;
  const auto img = (dir / "img").string(), lab = (dir / "lab").string();
  write_idx(ds, img, lab, 2, 2);
  const Dataset back = load_idx(img, lab);
  EXPECT_EQ(back.x.data, ds.x.data);
  EXPECT_EQ(back.y, ds.y);
  EXPECT_THROW(write_idx(ds, img, lab, 3, 3), std::invalid_argument);
}

TEST(Idx, RejectsCorruptFiles) {
  const auto dir = testing::temp_dir("idx");
  write_text(dir / "img", "xx");
  write_text(dir / "lab", "xxxxxxxx");
  EXPECT_THROW(load_idx((dir / "img").string(), (dir / "lab").string()), DataError);
}

TEST(Libsvm, RoundTripAndDeclaredWidth) {
  const auto dir = testing::temp_dir("svm");
  const Dataset ds = small_dataset();
  write_libsvm(ds, (dir / "d.svm").string());
  const Dataset back = load_libsvm((dir / "d.svm").string(), 3);
  EXPECT_EQ(back.x.data, ds.x.data);
  EXPECT_EQ(back.y, ds.y);
}

TEST(Libsvm, SparseEntriesAndErrors) {
  const auto dir = testing::temp_dir("svm");
  write_text(dir / "d.svm", "1 2:0.5 # comment\n-1 1:1\n\n1 3:2\n");
  const Dataset ds = load_libsvm((dir / "d.svm").string());
  EXPECT_EQ(ds.dim(), 3u);
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.x.data, (std::vector<double>{0, 0.5, 0, 1, 0, 0, 0, 0, 2}));
  EXPECT_EQ(ds.y, (std::vector<int>{1, 0, 1}));
  EXPECT_THROW(load_libsvm((dir / "d.svm").string(), 2), DataError);
  write_text(dir / "bad.svm", "1 1:1\n1 0:3\n");
  EXPECT_NE(error_of([&] { load_libsvm((dir / "bad.svm").string()); }).find("bad.svm:2"),
            std::string::npos);
}

TEST(Split, StratifiedCountsPerClassAndDeterminism) {
  SyntheticSpec spec;
  spec.samples = 300;
  spec.classes = 3;
  spec.noise = 5;
  const Dataset ds = generate_synthetic(spec);
  const Split s = stratified_split(ds, 0.2, 9);
  EXPECT_EQ(s.train.size() + s.test.size(), 300u);
  const auto test_hist = ds.class_histogram(s.test);
  const auto all_hist = ds.class_histogram();
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(test_hist[c],
              static_cast<std::size_t>(std::llround(0.2 * all_hist[c])));
  }
  std::set<std::size_t> seen(s.train.begin(), s.train.end());
  for (std::size_t r : s.test) EXPECT_TRUE(seen.insert(r).second);
  EXPECT_EQ(stratified_split(ds, 0.2, 9).test, s.test);
  EXPECT_THROW(stratified_split(ds, 1.0, 9), ConfigError);
}

TEST(Split, ConcatKeepsCanonicalBoundary) {
  const Dataset a = small_dataset();
  Dataset b = small_dataset();
  b.x = Matrix(2, 3, 7.0);
  b.y = {1, 1};
  const auto [merged, split] = concat_train_test(a, b);
  EXPECT_EQ(merged.size(), 8u);
  EXPECT_EQ(split.train, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(split.test, (std::vector<std::size_t>{6, 7}));
  EXPECT_EQ(merged.x(7, 2), 7.0);
}

TEST(Normalize, ZScoreAndMinMaxFitOnGivenRows) {
  Dataset ds;
  ds.x = Matrix(4, 2);
  ds.x.data = {1, 5, 3, 5, 5, 5, 100, 5};
  ds.y = {0, 0, 0, 0};
  ds.num_classes = 1;
  const std::vector<std::size_t> fit{0, 1, 2};
  const Dataset z = normalize(ds, NormalizeMode::kZScore, fit);
  const double sd = std::sqrt(8.0 / 3.0);
  EXPECT_NEAR(z.x(0, 0), -2.0 / sd, 1e-12);
  EXPECT_NEAR(z.x(2, 0), 2.0 / sd, 1e-12);
  EXPECT_NEAR(z.x(3, 0), 97.0 / sd, 1e-9);
  EXPECT_EQ(z.x(1, 1), 0.0);  // constant feature
  const Dataset mm = normalize(ds, NormalizeMode::kMinMax, fit);
  EXPECT_NEAR(mm.x(1, 0), 0.5, 1e-12);
  EXPECT_NEAR(mm.x(3, 0), 24.75, 1e-12);
  EXPECT_EQ(normalize(ds, NormalizeMode::kNone).x.data, ds.x.data);
  EXPECT_THROW(parse_normalize_mode("l2"), ConfigError);
}

class Dirichlet : public ::testing::TestWithParam<double> {};

TEST_P(Dirichlet, ShardsPartitionTrainRowsWithoutEmpties) {
  SyntheticSpec spec;
  spec.samples = 500;
  spec.classes = 5;
  spec.noise = 3;
  const Dataset ds = generate_synthetic(spec);
  const Split split = stratified_split(ds, 0.2, 1);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = partition_noniid(ds, split, 10, GetParam(), seed);
    ASSERT_EQ(p.shards.size(), 10u);
    std::multiset<std::size_t> all;
    for (const auto& shard : p.shards) {
      EXPECT_FALSE(shard.empty());
      all.insert(shard.begin(), shard.end());
    }
    EXPECT_EQ(all.size(), split.train.size());
    EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()),
              std::set<std::size_t>(split.train.begin(), split.train.end()));
    EXPECT_EQ(p.test, split.test);
    EXPECT_EQ(partition_noniid(ds, split, 10, GetParam(), seed).shards, p.shards);
  }
}

INSTANTIATE_TEST_SUITE_P(Alphas, Dirichlet, ::testing::Values(0.05, 0.5, 100.0));

TEST(DirichletSkew, SmallAlphaConcentratesLabels) {
  SyntheticSpec spec;
  spec.samples = 1000;
  spec.classes = 5;
  spec.noise = 1;
  const Dataset ds = generate_synthetic(spec);
  const Split split = stratified_split(ds, 0.0, 1);
  const auto mean_classes = [&](double alpha) {
    double total = 0.0;
    const auto p = partition_noniid(ds, split, 10, alpha, 3);
    for (const auto& shard : p.shards) {
      std::size_t present = 0;
      for (std::size_t c : ds.class_histogram(shard)) present += c > 0;
      total += static_cast<double>(present);
    }
    return total / 10.0;
  };
  EXPECT_LT(mean_classes(0.05), mean_classes(100.0));
  EXPECT_NEAR(mean_classes(100.0), 5.0, 0.01);
}

TEST(DirichletSkew, RejectsBadArguments) {
  const Dataset ds = small_dataset();
  const Split split = stratified_split(ds, 0.0, 1);
  EXPECT_THROW(partition_noniid(ds, split, 1, 0.5, 1), ConfigError);
  EXPECT_THROW(partition_noniid(ds, split, 3, 0.0, 1), ConfigError);
  EXPECT_THROW(partition_noniid(ds, split, 7, 0.5, 1), ConfigError);
}

TEST(Synthetic, ShapeInformativeColumnsAndSignal) {
  SyntheticSpec spec;
  spec.informative = 4;
  spec.noise = 16;
  spec.samples = 4000;
  spec.separation = 0.5;
  const Dataset ds = generate_synthetic(spec);
  EXPECT_EQ(ds.dim(), 20u);
  EXPECT_EQ(ds.size(), 4000u);
  ASSERT_EQ(ds.informative.size(), 4u);
  const auto hist = ds.class_histogram();
  EXPECT_EQ(hist[0], 2000u);
  // Class-mean gap is 2 * separation on informative columns, ~0 elsewhere.
  const std::set<std::size_t> info(ds.informative.begin(), ds.informative.end());
  for (std::size_t c = 0; c < ds.dim(); ++c) {
    double m[2] = {0, 0};
    for (std::size_t r = 0; r < ds.size(); ++r) m[ds.y[r]] += ds.x(r, c);
    const double gap = std::fabs(m[0] - m[1]) / 2000.0;
    if (info.count(c)) {
      EXPECT_NEAR(gap, 1.0, 0.15) << "column " << c;
    } else {
      EXPECT_LT(gap, 0.15) << "column " << c;
    }
  }
  const Dataset again = generate_synthetic(spec);
  EXPECT_EQ(again.x.data, ds.x.data);
  spec.classes = 1;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
}

TEST(Columns, SelectAndGather) {
  const Dataset ds = small_dataset();
  const std::vector<std::size_t> cols{2, 0};
  const Dataset sub = select_columns(ds, cols);
  EXPECT_EQ(sub.dim(), 2u);
  EXPECT_EQ(sub.x(1, 0), ds.x(1, 2));
  EXPECT_EQ(sub.x(1, 1), ds.x(1, 0));
  EXPECT_EQ(sub.feature_names, (std::vector<std::string>{"c", "a"}));
  const std::vector<std::size_t> bad{3};
  EXPECT_THROW(select_columns(ds, bad), std::out_of_range);
  const std::vector<std::size_t> rows{4, 1};
  EXPECT_EQ(gather_labels(ds, rows), (std::vector<int>{1, 1}));
  EXPECT_EQ(gather_rows(ds, rows).data[0], ds.x(4, 0));
}

}  // namespace
}  // namespace dsffs
