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
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "fairlatent/error.hpp"

namespace fairlatent {
namespace {

using Tuple = std::vector<int>;

struct Tally {
  std::vector<int> labels;  // every label seen as truth or prediction
  std::vector<int> ys;      // observed truths
  std::vector<Tuple> tuples;
  std::map<std::pair<int, Tuple>, std::size_t> count;
  std::map<std::pair<int, Tuple>, std::size_t> correct;
  std::map<std::tuple<int, Tuple, int>, std::size_t> hits;
};

Tally Count(std::span<const PredictionRecord> records) {
  if (records.empty()) throw InvalidArgument("metrics: no records");
  const std::size_t k = records.front().s.size();
  std::set<int> labels, ys;
  std::set<Tuple> tuples;
  Tally t;
  for (const PredictionRecord& r : records) {
    if (r.s.size() != k) {
      throw InvalidArgument("metrics: records carry different numbers of spurious labels");
    }
    labels.insert(r.y_true);
    labels.insert(r.y_pred);
    ys.insert(r.y_true);
    tuples.insert(r.s);
    ++t.count[{r.y_true, r.s}];
    if (r.y_pred == r.y_true) ++t.correct[{r.y_true, r.s}];
    ++t.hits[{r.y_true, r.s, r.y_pred}];
  }
  t.labels.assign(labels.begin(), labels.end());
  t.ys.assign(ys.begin(), ys.end());
  t.tuples.assign(tuples.begin(), tuples.end());
  return t;
}

std::size_t Lookup(const auto& table, const auto& key) {
  const auto it = table.find(key);
  return it == table.end() ? 0 : it->second;
}

Rational Make(std::size_t num, std::size_t den) {
  return {static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
}

}  // namespace

bool operator<(const Rational& a, const Rational& b) {
  return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
}

bool operator==(const Rational& a, const Rational& b) {
  return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
}

std::string FormatGroup(int y, const std::vector<int>& s) {
  return fmt::format("(y={}, s=({}))", y, fmt::join(s, ","));
}

double Accuracy(std::span<const PredictionRecord> records) {
  if (records.empty()) throw InvalidArgument("accuracy: no records");
  std::size_t correct = 0;
  for (const PredictionRecord& r : records) correct += r.y_pred == r.y_true;
  return Make(correct, records.size()).value();
}

double WorstGroupAccuracy(std::span<const PredictionRecord> records) {
  const Tally t = Count(records);
  std::vector<std::string> missing;
  Rational worst{1, 1};
  for (int y : t.ys) {
    for (const Tuple& s : t.tuples) {
      const std::size_t n = Lookup(t.count, std::pair{y, s});
      if (n == 0) {
        missing.push_back(FormatGroup(y, s));
        continue;
      }
      const Rational recall = Make(Lookup(t.correct, std::pair{y, s}), n);
      if (recall < worst) worst = recall;
    }
  }
  if (!missing.empty()) {
    throw EmptyGroup(fmt::format("worst-group accuracy: no records for {}",
                                 fmt::join(missing, ", ")));
  }
  return worst.value();
}

Rational EqualizedOddsExact(std::span<const PredictionRecord> records,
                            std::vector<std::string>* warnings) {
  const Tally t = Count(records);
  Rational best{0, 1};
  for (int y : t.ys) {
    std::vector<const Tuple*> strata;
    std::vector<std::size_t> sizes;
    for (const Tuple& s : t.tuples) {
      const std::size_t n = Lookup(t.count, std::pair{y, s});
      if (n == 0) {
        if (warnings != nullptr) {
          warnings->push_back(
              fmt::format("stratum {} has no records; left out of EO", FormatGroup(y, s)));
        }
        continue;
      }
      strata.push_back(&s);
      sizes.push_back(n);
    }
    for (int y_hat : t.labels) {
      for (std::size_t i = 0; i < strata.size(); ++i) {
        const auto hi = static_cast<std::int64_t>(Lookup(t.hits, std::tuple{y, *strata[i], y_hat}));
        for (std::size_t j = i + 1; j < strata.size(); ++j) {
          const auto hj =
              static_cast<std::int64_t>(Lookup(t.hits, std::tuple{y, *strata[j], y_hat}));
          const auto ci = static_cast<std::int64_t>(sizes[i]);
          const auto cj = static_cast<std::int64_t>(sizes[j]);
          std::int64_t diff = hi * cj - hj * ci;
          if (diff < 0) diff = -diff;
          const Rational gap{diff, ci * cj};
          if (best < gap) best = gap;
        }
      }
    }
  }
  return best;
}

double EqualizedOdds(std::span<const PredictionRecord> records,
                     std::vector<std::string>* warnings) {
  return EqualizedOddsExact(records, warnings).value();
}

FairnessReport Evaluate(std::span<const PredictionRecord> records) {
  FairnessReport report;
  report.count = records.size();
  report.accuracy = Accuracy(records);
  report.eo = EqualizedOdds(records, &report.warnings);
  report.worst_group = WorstGroupAccuracy(records);
  const Tally t = Count(records);
  for (int y : t.ys) {
    for (const Tuple& s : t.tuples) {
      GroupStat g;
      g.y = y;
      g.s = s;
      g.count = Lookup(t.count, std::pair{y, s});
      g.correct = Lookup(t.correct, std::pair{y, s});
      g.accuracy = g.count ? Make(g.correct, g.count).value() : 0.0;
      report.per_group.push_back(std::move(g));
    }
  }
  for (const Tuple& s : t.tuples) {
    for (int y : t.ys) {
      const std::size_t n = Lookup(t.count, std::pair{y, s});
      if (n == 0) continue;
      for (int y_hat : t.labels) {
        ConditionalRate rate;
        rate.s = s;
        rate.y = y;
        rate.y_hat = y_hat;
        rate.count = n;
        rate.hits = Lookup(t.hits, std::tuple{y, s, y_hat});
        rate.rate = Make(rate.hits, n).value();
        report.conditional_rates.push_back(std::move(rate));
      }
    }
  }
  return report;
}

std::vector<PredictionRecord> MakeRecords(std::span<const int> y_true,
                                          std::span<const int> y_pred,
                                          std::span<const int> s_flat,
                                          std::size_t num_spurious) {
  if (y_true.size() != y_pred.size() || s_flat.size() != y_true.size() * num_spurious) {
    throw DimensionMismatch("records: label array lengths disagree");
  }
  std::vector<PredictionRecord> out(y_true.size());
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    out[i].y_true = y_true[i];
    out[i].y_pred = y_pred[i];
    out[i].s.assign(s_flat.begin() + static_cast<std::ptrdiff_t>(i * num_spurious),
                    s_flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * num_spurious));
  }
  return out;
}

}  // namespace fairlatent
