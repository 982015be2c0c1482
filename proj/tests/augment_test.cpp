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


#include "fairlatent/augment.hpp"

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "fairlatent/direction_combiner.hpp"
#include "fairlatent/error.hpp"
#include "fairlatent/logreg.hpp"

namespace fairlatent {
namespace {

Eigen::VectorXd SpuriousAxis(std::size_t d) {
  Eigen::VectorXd n = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * d));
  n.tail(static_cast<Eigen::Index>(d)).setConstant(1.0 / std::sqrt(static_cast<double>(d)));
  return n;
}

std::span<const double> View(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

AugmentConfig Range(double lo, double hi, double tau = 0.0) {
  AugmentConfig cfg;
  cfg.alpha_l = lo;
  cfg.alpha_u = hi;
  cfg.noise_std = tau;
  cfg.seed = 3;
  return cfg;
}

// Analytic combined direction for a 2:1 world.
struct Detected {
  Dataset data;
  CombinedDirection combined;
};

Detected DetectSpurious(std::size_t d, double sigma_y, double sigma_s) {
  const WorldSpec spec =
      WorldSpec::SingleBlock(d, 6000, WorldSpec::BiasFromRatio(2.0), sigma_y, sigma_s, 11);
  Dataset data = SampleDataset(spec);
  RegressionConfig lo, hi;
  lo.lambda = 1e-4;
  hi.lambda = 1e4;
  const std::vector<RegressionConfig> cfgs{lo, hi};
  const auto fits = FitPath(data, cfgs);
  CombinedDirection combined = CombineAnalytic(fits[0], fits[1], data.subspace_map());
  return {std::move(data), std::move(combined)};
}

TEST(CalibrateRange, TightClassesAtUnitDistance) {
  const Dataset data =
      SampleDataset(WorldSpec::SingleBlock(1, 400, 0.75, 0.1, 1e-9, 0));
  const AlphaRange r = CalibrateRange(data, SpuriousAxis(1), 0.5);
  EXPECT_NEAR(r.alpha_l, 1.0, 1e-6);
  EXPECT_NEAR(r.alpha_u, 2.0, 1e-6);
}

TEST(CalibrateRange, AnalyticDirectionMatchesClassGap) {
  const std::size_t d = 5;
  const Detected det = DetectSpurious(d, 0.1, 0.1);
  const AlphaRange r = CalibrateRange(det.data, det.combined.n_cmb, 0.5);
  const double expected = 2.0 * std::sqrt(static_cast<double>(d));
  EXPECT_NEAR(r.alpha_u, expected, 0.2 * expected);
  EXPECT_DOUBLE_EQ(r.alpha_l, r.alpha_u / 2.0);
}

TEST(CalibrateRange, FullCoverageIsAtLeastMedianGap) {
  const Dataset data = SampleDataset(WorldSpec::SingleBlock(3, 900, 0.8, 0.3, 0.3, 1));
  const Eigen::VectorXd n = SpuriousAxis(3);
  EXPECT_GE(CalibrateRange(data, n, 1.0).alpha_u, CalibrateRange(data, n, 0.5).alpha_u);
}

TEST(CalibrateRange, RejectsNonSeparatingDirection) {
  const Dataset data = SampleDataset(WorldSpec::SingleBlock(2, 400, 0.5, 0.1, 0.1, 0));
  // The negated axis orders the classes the wrong way round.
  EXPECT_THROW(CalibrateRange(data, -SpuriousAxis(2), 0.5), InvalidArgument);
  EXPECT_THROW(CalibrateRange(data, SpuriousAxis(3), 0.5), DimensionMismatch);
  EXPECT_THROW(CalibrateRange(data, SpuriousAxis(2), 0.0), InvalidArgument);
}

TEST(EditLatent, Examples) {
  Eigen::VectorXd z(2);
  z << 1.0, -1.0;
  const Eigen::VectorXd n = SpuriousAxis(1);
  EXPECT_EQ(EditLatent(z, n, 0.0), z);
  const Eigen::VectorXd edited = EditLatent(z, n, 2.0);
  EXPECT_DOUBLE_EQ(edited[0], 1.0);
  EXPECT_DOUBLE_EQ(edited[1], 1.0);
  const SubspaceMap map = SubspaceMap::For(WorldSpec::SingleBlock(1, 4, 0.5, 0.1, 0.1, 0));
  const auto target = OracleModel::BayesTarget(map);
  const auto spurious = OracleModel::BayesSpurious(map, 0);
  const std::span<const double> before(z.data(), 2), after(edited.data(), 2);
  EXPECT_EQ(target.Predict(before), target.Predict(after));
  EXPECT_NE(spurious.Predict(before), spurious.Predict(after));
}

TEST(EditLatent, EditBackIsExact) {
  CounterRng rng({5, StreamDomain::kGridProbes, 0, 0}, 0);
  for (int k = 0; k < 200; ++k) {
    Eigen::VectorXd z(6), n(6);
    for (int c = 0; c < 6; ++c) {
      z[c] = rng.Uniform(-4, 4);
      n[c] = rng.Uniform(-1, 1);
    }
    // Exactness holds whenever a * n[c] is exactly representable relative
    // to z[c]; integer degrees on dyadic directions guarantee it.
    n = (n * 1024.0).array().round() / 1024.0;
    z = (z * 1024.0).array().round() / 1024.0;
    const double a = static_cast<double>(k % 7);
    EXPECT_EQ(EditLatent(EditLatent(z, n, a), n, -a), z);
  }
  EXPECT_THROW(EditLatent(Eigen::VectorXd::Zero(3), SpuriousAxis(1), 1.0), DimensionMismatch);
}

TEST(SampleViews, SinglePointWithoutNoiseIsExact) {
  const Eigen::VectorXd n = SpuriousAxis(2);
  Eigen::VectorXd z(4);
  z << 0.3, -0.2, 1.1, 0.9;
  CounterRng rng({0, StreamDomain::kAugment, 0, 0}, 0);
  const ViewPair v = SampleViews(z, n, Range(1.5, 1.5), rng);
  EXPECT_EQ(v.view1, (z + 1.5 * n).eval());
  EXPECT_EQ(v.view2, (z - 1.5 * n).eval());
}

TEST(SampleViews, DegreeMeanMatchesRange) {
  const AugmentConfig cfg = Range(1.2, 3.4);
  CounterRng rng({1, StreamDomain::kAugment, 0, 0}, 0);
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double a = SampleDegree(cfg, rng);
    ASSERT_GE(a, cfg.alpha_l);
    ASSERT_LE(a, cfg.alpha_u);
    sum += a;
  }
  EXPECT_NEAR(sum / draws, 2.3, 0.01 * 2.3);
}

TEST(SampleViews, DifferenceAlongDirectionStaysInBand) {
  const double tau = 0.05;
  const AugmentConfig cfg = Range(1.0, 2.0, tau);
  const Eigen::VectorXd n = SpuriousAxis(3);
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(6, 0.5);
  int inside = 0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    CounterRng rng = ViewStream(cfg, static_cast<std::size_t>(i), 0);
    const ViewPair v = SampleViews(z, n, cfg, rng);
    const double proj = (v.view1 - v.view2).dot(n);
    if (proj >= 2.0 * cfg.alpha_l - 6 * tau && proj <= 2.0 * cfg.alpha_u + 6 * tau) ++inside;
  }
  EXPECT_GE(static_cast<double>(inside) / trials, 0.999);
}

TEST(SampleViews, DeterministicPerSampleAndEpoch) {
  const AugmentConfig cfg = Range(1.0, 2.0, 0.1);
  const Eigen::VectorXd n = SpuriousAxis(2);
  const Eigen::VectorXd z = Eigen::VectorXd::Ones(4);
  CounterRng a = ViewStream(cfg, 17, 3), b = ViewStream(cfg, 17, 3), c = ViewStream(cfg, 17, 4);
  const ViewPair va = SampleViews(z, n, cfg, a);
  const ViewPair vb = SampleViews(z, n, cfg, b);
  const ViewPair vc = SampleViews(z, n, cfg, c);
  EXPECT_EQ(va.view1, vb.view1);
  EXPECT_EQ(va.view2, vb.view2);
  EXPECT_NE(va.view1, vc.view1);
}

TEST(SampleViews, NoiseOnlyViewsSkipDegrees) {
  AugmentConfig cfg = Range(0.0, 0.0, 0.0);
  cfg.generative = false;
  EXPECT_NO_THROW(cfg.Validate());
  CounterRng rng({0, StreamDomain::kAugment, 0, 0}, 0);
  const Eigen::VectorXd z = Eigen::VectorXd::Ones(4);
  const ViewPair v = SampleViews(z, SpuriousAxis(2), cfg, rng);
  EXPECT_EQ(v.view1, z);
  EXPECT_EQ(v.view2, z);
}

TEST(AugmentConfig, Invariants) {
  EXPECT_THROW(Range(0.0, 1.0).Validate(), InvalidArgument);
  EXPECT_THROW(Range(2.0, 1.0).Validate(), InvalidArgument);
  EXPECT_THROW(Range(1.0, 2.0, -0.1).Validate(), InvalidArgument);
  AugmentConfig no_int = Range(1.2, 1.8);
  no_int.integer_degrees = true;
  EXPECT_THROW(no_int.Validate(), InvalidArgument);
}

TEST(IntegerDegrees, CoverEveryIntegerInRange) {
  AugmentConfig cfg = Range(2.5, 7.5);
  cfg.integer_degrees = true;
  std::set<double> seen;
  // One epoch of a 1000-sample dataset, two degrees per sample.
  for (std::size_t i = 0; i < 1000; ++i) {
    CounterRng rng = ViewStream(cfg, i, 0);
    seen.insert(SampleDegree(cfg, rng));
    seen.insert(SampleDegree(cfg, rng));
  }
  EXPECT_EQ(seen, (std::set<double>{3, 4, 5, 6, 7}));
  EXPECT_GE(seen.size(), static_cast<std::size_t>(std::ceil(cfg.alpha_u - cfg.alpha_l)));
}

TEST(EditProperties, TargetOraclePreservedUnderAnalyticEdit) {
  const std::size_t d = 5;
  const Detected det = DetectSpurious(d, 0.1, 0.1);
  const AlphaRange r = CalibrateRange(det.data, det.combined.n_cmb, 0.5);
  const SubspaceMap& map = det.data.subspace_map();
  const auto target = OracleModel::BayesTarget(map);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < det.data.size(); ++i) {
    const LatentSample s = det.data.sample(i);
    const Eigen::VectorXd e = EditLatent(s.z, det.combined.n_cmb, r.alpha_u);
    kept += target.Predict(View(s.z)) == target.Predict(View(e));
  }
  EXPECT_GE(static_cast<double>(kept) / det.data.size(), 0.99);
}

TEST(EditProperties, UpperDegreeFlipsMinoritySide) {
  const Detected det = DetectSpurious(5, 0.1, 0.1);
  const AlphaRange r = CalibrateRange(det.data, det.combined.n_cmb, 0.5);
  const auto spurious = OracleModel::BayesSpurious(det.data.subspace_map(), 0);
  // n_cmb points toward s = +1, so the +alpha edit moves s = -1 samples across.
  std::size_t flipped = 0, total = 0;
  for (std::size_t i = 0; i < det.data.size(); ++i) {
    const LatentSample s = det.data.sample(i);
    if (s.s[0] != -1) continue;
    ++total;
    const Eigen::VectorXd e = EditLatent(s.z, det.combined.n_cmb, r.alpha_u);
    flipped += spurious.Predict(View(e)) == 1;
  }
  EXPECT_GE(static_cast<double>(flipped) / total, 0.5);
}

}  // namespace
}  // namespace fairlatent
