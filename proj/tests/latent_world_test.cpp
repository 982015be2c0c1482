/*
 * Copyright 2026 The fairlatent Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "fairlatent/latent_world.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "fairlatent/error.hpp"

namespace fairlatent {
namespace {

TEST(GroupSizes, TwoToOneRounding) {
  const WorldSpec spec =
      WorldSpec::SingleBlock(100, 20000, WorldSpec::BiasFromRatio(2.0), 0.1, 0.1, 7);
  EXPECT_EQ(GroupSizes(spec), (std::vector<std::size_t>{6667, 6667, 3333, 3333}));
}

TEST(GroupSizes, UnbiasedMinimum) {
  const WorldSpec spec = WorldSpec::SingleBlock(3, 4, 0.5, 0.1, 0.1, 0);
  const Dataset data = SampleDataset(spec);
  EXPECT_EQ(data.group_counts(), (std::vector<std::size_t>{1, 1, 1, 1}));
}

TEST(GroupSizes, SumsToNAndTracksBias) {
  for (std::size_t n : {4u, 5u, 7u, 101u, 999u, 20000u}) {
    for (double beta : {0.5, 0.6, 2.0 / 3.0, 0.9, 0.95}) {
      const WorldSpec spec = WorldSpec::SingleBlock(1, n, beta, 0.1, 0.1, 0);
      std::vector<std::size_t> sizes;
      try {
        sizes = GroupSizes(spec);
      } catch (const InvalidArgument&) {
        continue;  // n too small for some group
      }
      std::size_t total = 0;
      for (auto s : sizes) total += s;
      EXPECT_EQ(total, n);
      EXPECT_LE(std::abs(double(sizes[0]) - n * beta / 2), 1.0);
      EXPECT_LE(std::abs(double(sizes[2]) - n * (1 - beta) / 2), 1.0);
    }
  }
}

TEST(GroupSizes, RejectsEmptyGroup) {
  const WorldSpec spec = WorldSpec::SingleBlock(1, 10, 0.95, 0.1, 0.1, 0);
  EXPECT_THROW(SampleDataset(spec), InvalidArgument);
}

TEST(WorldSpec, RejectsInvalid) {
  WorldSpec spec = WorldSpec::SingleBlock(2, 100, 0.9, 0.1, 0.1, 0);
  spec.spurious_blocks[0].bias = 1.0;
  EXPECT_THROW(spec.Validate(), InvalidArgument);
  spec.spurious_blocks[0].bias = 0.4;
  EXPECT_THROW(spec.Validate(), InvalidArgument);
  spec = WorldSpec::SingleBlock(2, 3, 0.5, 0.1, 0.1, 0);
  EXPECT_THROW(spec.Validate(), InvalidArgument);
  spec = WorldSpec::SingleBlock(2, 100, 0.5, 0.0, 0.1, 0);
  EXPECT_THROW(spec.Validate(), InvalidArgument);
}

TEST(Dataset, GroupsMatchLabels) {
  WorldSpec spec = WorldSpec::SingleBlock(3, 200, 0.8, 0.5, 0.5, 1);
  spec.spurious_blocks.push_back({2, 0.3, 0.6});
  const Dataset data = SampleDataset(spec, 2);
  ASSERT_EQ(data.dim(), 3u + 3u + 2u);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(data.group(i), GroupOf(data.y(i), data.s(i)));
    const GroupLabels labels = LabelsOfGroup(data.group(i), 2);
    EXPECT_EQ(labels.y, data.y(i));
  }
  // Class balance within rounding.
  int pos = 0;
  for (int y : data.y()) pos += y == 1;
  EXPECT_LE(std::abs(pos - 100), 2);
}

TEST(Dataset, SampleMeansMatchSpec) {
  const WorldSpec spec = WorldSpec::SingleBlock(2, 100000, 0.5, 0.1, 0.1, 3);
  const Dataset data = SampleDataset(spec);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.y(i) != 1) continue;
    mean += Eigen::Vector2d(data.row(i)[0], data.row(i)[1]);
    ++count;
  }
  mean /= double(count);
  EXPECT_NEAR(mean[0], 1.0, 0.01);
  EXPECT_NEAR(mean[1], 1.0, 0.01);
}

TEST(Dataset, BlockMomentsWithinFiveSigma) {
  const double sy = 0.7, ss = 1.3;
  const std::size_t n = 100000;
  const WorldSpec spec = WorldSpec::SingleBlock(1, n, 0.75, sy, ss, 11);
  const Dataset data = SampleDataset(spec);
  double my = 0, vy = 0, ms = 0, vs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ey = data.row(i)[0] - data.y(i);
    const double es = data.row(i)[1] - data.s(i)[0];
    my += ey, vy += ey * ey, ms += es, vs += es * es;
  }
  my /= n, vy /= n, ms /= n, vs /= n;
  EXPECT_NEAR(my, 0.0, 5 * sy / std::sqrt(n));
  EXPECT_NEAR(ms, 0.0, 5 * ss / std::sqrt(n));
  EXPECT_NEAR(vy, sy * sy, 5 * sy * sy * std::sqrt(2.0 / n));
  EXPECT_NEAR(vs, ss * ss, 5 * ss * ss * std::sqrt(2.0 / n));
}

TEST(Dataset, SeedDeterminismAndIndependence) {
  const WorldSpec spec = WorldSpec::SingleBlock(4, 300, 0.9, 0.2, 0.2, 5);
  const Dataset a = SampleDataset(spec, 1), b = SampleDataset(spec, 1);
  EXPECT_EQ(a.z(), b.z());
  const Dataset c = SampleDataset(spec, 2);
  EXPECT_NE(a.z(), c.z());
  const Dataset e = SampleDataset(spec, 1, StreamDomain::kEvalData);
  EXPECT_NE(a.z(), e.z());
}

TEST(Dataset, SharedNoiseEqualsIndividualSamples) {
  std::vector<WorldSpec> specs;
  for (double sy : {0.1, 1.0}) {
    for (double ss : {0.1, 1.0}) specs.push_back(WorldSpec::SingleBlock(5, 400, 0.8, sy, ss, 9));
  }
  const std::vector<Dataset> shared = SampleWithSharedNoise(specs, 4);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const Dataset alone = SampleDataset(specs[k], 4);
    EXPECT_EQ(shared[k].z(), alone.z());
    EXPECT_TRUE(std::equal(shared[k].y().begin(), shared[k].y().end(), alone.y().begin()));
  }
}

TEST(Dataset, BalancedEvalSet) {
  const WorldSpec spec = WorldSpec::SingleBlock(2, 100, 0.95, 1.0, 1.0, 0);
  const Dataset eval = SampleBalanced(spec, 25, 0);
  EXPECT_EQ(eval.group_counts(), (std::vector<std::size_t>{25, 25, 25, 25}));
}

TEST(Oracle, ClassMeanAndFlippedCoordinate) {
  const WorldSpec spec = WorldSpec::SingleBlock(100, 100, 0.5, 0.1, 0.1, 0);
  const SubspaceMap map = SubspaceMap::For(spec);
  const OracleModel target = OracleModel::BayesTarget(map);
  std::vector<double> z(200, 0.0);
  for (int c = 0; c < 100; ++c) z[c] = 1.0;
  EXPECT_EQ(target.Predict(z), 1);
  for (int c = 0; c < 100; ++c) z[c] = -1.0;
  z[0] = 1.0;
  EXPECT_EQ(target.Predict(z), -1);
}

TEST(Oracle, TieGoesPositiveAndDimensionChecked) {
  const WorldSpec spec = WorldSpec::SingleBlock(2, 100, 0.5, 0.1, 0.1, 0);
  const SubspaceMap map = SubspaceMap::For(spec);
  const std::vector<double> zero(4, 0.0);
  EXPECT_EQ(OracleModel::BayesTarget(map).Predict(zero), 1);
  EXPECT_EQ(OracleModel::BayesSpurious(map, 0).Predict(zero), 1);
  EXPECT_THROW(OracleModel::BayesTarget(map).Predict(std::vector<double>(3, 0.0)),
               DimensionMismatch);
  EXPECT_THROW(OracleModel::BayesSpurious(map, 1), InvalidArgument);
}

TEST(Oracle, ReadsOnlyItsBlock) {
  const WorldSpec spec = WorldSpec::SingleBlock(3, 100, 0.5, 0.1, 0.1, 0);
  const SubspaceMap map = SubspaceMap::For(spec);
  std::vector<double> z = {1, 1, 1, -5, -5, -5};
  EXPECT_EQ(OracleModel::BayesTarget(map).Predict(z), 1);
  EXPECT_EQ(OracleModel::BayesSpurious(map, 0).Predict(z), -1);
}

TEST(Oracle, AccuracyHighAndInvariantToBias) {
  for (double beta : {0.5, 0.9}) {
    const WorldSpec spec = WorldSpec::SingleBlock(100, 10000, beta, 0.1, 0.1, 2);
    const Dataset data = SampleDataset(spec);
    const OracleModel oracle = OracleModel::BayesTarget(data.subspace_map());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) correct += oracle.Predict(data.row(i)) == data.y(i);
    EXPECT_GE(correct / double(data.size()), 0.999);
  }
}

TEST(Dataset, CsvHeaderAndShape) {
  const WorldSpec spec = WorldSpec::SingleBlock(2, 8, 0.5, 0.1, 0.1, 0);
  const Dataset data = SampleDataset(spec);
  std::ostringstream out;
  WriteDatasetCsv(data, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "z_0,z_1,z_2,z_3,y,s_0");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 8);
}

}  // namespace
}  // namespace fairlatent
