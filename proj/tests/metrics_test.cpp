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


#include "fairlatent/metrics.hpp"

#include <algorithm>
#include <vector>

#include <gtest/gtest.h>

#include "fairlatent/error.hpp"
#include "fairlatent/rng.hpp"

namespace fairlatent {
namespace {

using Records = std::vector<PredictionRecord>;

// Appends `count` records of stratum (y, s), `hits` of which predict `hit`
// and the rest predict `miss`.
void Add(Records& r, int y, std::vector<int> s, int count, int hits, int hit, int miss) {
  for (int i = 0; i < count; ++i) r.push_back({y, i < hits ? hit : miss, s});
}

TEST(EqualizedOdds, IndependentOfSpuriousIsZero) {
  Records r;
  for (int s : {-1, 1}) {
    Add(r, 1, {s}, 10, 8, 1, -1);
    Add(r, -1, {s}, 10, 7, -1, 1);
  }
  EXPECT_EQ(EqualizedOdds(r), 0.0);
}

TEST(EqualizedOdds, BinaryTruePositiveGap) {
  Records r;
  Add(r, 1, {0}, 10, 9, 1, 0);
  Add(r, 1, {1}, 10, 7, 1, 0);
  Add(r, 0, {0}, 10, 6, 0, 1);
  Add(r, 0, {1}, 10, 6, 0, 1);
  const Rational eo = EqualizedOddsExact(r);
  EXPECT_EQ(eo, (Rational{1, 5}));
  EXPECT_DOUBLE_EQ(EqualizedOdds(r), 0.2);
}

TEST(EqualizedOdds, FourGroupsTakePairwiseMax) {
  Records r;
  const std::vector<std::vector<int>> groups{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  const int hits[] = {9, 8, 7, 6};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Add(r, 1, groups[g], 10, hits[g], 1, 0);
    Add(r, 0, groups[g], 10, 5, 0, 1);
  }
  EXPECT_EQ(EqualizedOddsExact(r), (Rational{3, 10}));
}

TEST(EqualizedOdds, EmptyStratumIsSkippedWithWarning) {
  Records r;
  Add(r, 1, {0}, 4, 4, 1, 0);
  Add(r, 1, {1}, 4, 2, 1, 0);
  Add(r, 0, {0}, 4, 4, 0, 1);
  std::vector<std::string> warnings;
  EXPECT_DOUBLE_EQ(EqualizedOdds(r, &warnings), 0.5);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("y=0"), std::string::npos);
}

TEST(EqualizedOdds, NoRecordsIsAnError) {
  EXPECT_THROW(EqualizedOdds(Records{}), InvalidArgument);
}

TEST(WorstGroup, Examples) {
  Records perfect;
  Add(perfect, 1, {1}, 5, 5, 1, -1);
  Add(perfect, -1, {1}, 5, 5, -1, 1);
  EXPECT_EQ(WorstGroupAccuracy(perfect), 1.0);

  Records r;
  Add(r, 1, {1}, 1000, 954, 1, -1);
  Add(r, 1, {-1}, 1000, 701, 1, -1);
  Add(r, -1, {1}, 1000, 880, -1, 1);
  Add(r, -1, {-1}, 1000, 910, -1, 1);
  EXPECT_DOUBLE_EQ(WorstGroupAccuracy(r), 0.701);

  Records single;
  Add(single, 1, {1}, 8, 6, 1, -1);
  EXPECT_DOUBLE_EQ(WorstGroupAccuracy(single), 0.75);
}

TEST(WorstGroup, EmptyGroupNamesIt) {
  Records r;
  Add(r, 1, {1}, 3, 3, 1, -1);
  Add(r, -1, {-1}, 3, 3, -1, 1);
  try {
    WorstGroupAccuracy(r);
    FAIL() << "expected EmptyGroup";
  } catch (const EmptyGroup& e) {
    EXPECT_NE(std::string(e.what()).find("(y=1, s=(-1))"), std::string::npos);
  }
}

TEST(Accuracy, Examples) {
  Records all;
  Add(all, 1, {0}, 7, 7, 1, 0);
  EXPECT_EQ(Accuracy(all), 1.0);
  Records alt;
  for (int i = 0; i < 10; ++i) alt.push_back({1, i % 2 == 0 ? 1 : 0, {0}});
  EXPECT_DOUBLE_EQ(Accuracy(alt), 0.5);
  EXPECT_THROW(Accuracy(Records{}), InvalidArgument);
}

Records RandomTable(CounterRng& rng, int classes, int groups, int n) {
  Records r;
  for (int i = 0; i < n; ++i) {
    const int y = static_cast<int>(rng.Below(static_cast<std::uint64_t>(classes)));
    const int p = static_cast<int>(rng.Below(static_cast<std::uint64_t>(classes)));
    const int g = static_cast<int>(rng.Below(static_cast<std::uint64_t>(groups)));
    r.push_back({y, p, {g % 2, g / 2}});
  }
  return r;
}

TEST(Properties, ReportInvariants) {
  CounterRng rng({31, StreamDomain::kGridProbes, 0, 0}, 0);
  for (int trial = 0; trial < 200; ++trial) {
    Records r;
    // Every stratum present so worst-group is defined.
    for (int y = 0; y < 3; ++y) {
      for (int g = 0; g < 4; ++g) {
        const int count = 1 + static_cast<int>(rng.Below(6));
        for (int i = 0; i < count; ++i) {
          r.push_back({y, static_cast<int>(rng.Below(3)), {g % 2, g / 2}});
        }
      }
    }
    const FairnessReport rep = Evaluate(r);
    EXPECT_GE(rep.eo, 0.0);
    EXPECT_LE(rep.eo, 1.0);
    std::size_t total = 0;
    double weighted = 0.0, best = 0.0;
    for (const GroupStat& g : rep.per_group) {
      total += g.count;
      weighted += g.accuracy * static_cast<double>(g.count);
      best = std::max(best, g.accuracy);
    }
    EXPECT_EQ(total, r.size());
    EXPECT_NEAR(weighted / static_cast<double>(total), rep.accuracy, 1e-12);
    EXPECT_LE(rep.worst_group, rep.accuracy);
    EXPECT_LE(rep.accuracy, best);
    for (const ConditionalRate& c : rep.conditional_rates) {
      EXPECT_GE(c.rate, 0.0);
      EXPECT_LE(c.rate, 1.0);
    }
  }
}

TEST(Properties, EoInvariantUnderPermutationAndRelabeling) {
  CounterRng rng({32, StreamDomain::kGridProbes, 0, 0}, 0);
  for (int trial = 0; trial < 200; ++trial) {
    Records r = RandomTable(rng, 3, 4, 40);
    const Rational eo = EqualizedOddsExact(r);
    Records shuffled = r;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      std::swap(shuffled[i - 1], shuffled[rng.Below(i)]);
    }
    EXPECT_EQ(EqualizedOddsExact(shuffled), eo);
    Records relabeled = r;
    for (auto& rec : relabeled) rec.s = {1 - rec.s[1], rec.s[0] + 5};
    EXPECT_EQ(EqualizedOddsExact(relabeled), eo);
  }
}

TEST(Properties, ZeroExactlyWhenRatesEqual) {
  CounterRng rng({33, StreamDomain::kGridProbes, 0, 0}, 0);
  for (int trial = 0; trial < 100; ++trial) {
    // Copy one group's table into every group: all rates equal.
    Records base = RandomTable(rng, 3, 1, 30);
    Records r;
    for (int g = 0; g < 4; ++g) {
      for (PredictionRecord rec : base) {
        rec.s = {g % 2, g / 2};
        r.push_back(rec);
      }
    }
    EXPECT_EQ(EqualizedOdds(r), 0.0);
    // Moving one prediction in one group breaks equality.
    for (PredictionRecord& rec : r) {
      if (rec.s == std::vector<int>{1, 1}) {
        rec.y_pred = (rec.y_pred + 1) % 3;
        break;
      }
    }
    EXPECT_GT(EqualizedOdds(r), 0.0);
  }
}

TEST(MakeRecords, FlattensSpuriousLabels) {
  const std::vector<int> y{1, -1}, pred{1, 1}, s{1, -1, -1, 1};
  const Records r = MakeRecords(y, pred, s, 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[1].s, (std::vector<int>{-1, 1}));
  EXPECT_THROW(MakeRecords(y, pred, s, 3), InvalidArgument);
}

}  // namespace
}  // namespace fairlatent
