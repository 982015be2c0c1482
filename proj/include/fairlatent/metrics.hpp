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


#ifndef FAIRLATENT_METRICS_HPP_
#define FAIRLATENT_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fairlatent {

struct PredictionRecord {
  int y_true = 0;
  int y_pred = 0;
  std::vector<int> s;
};

// Nonnegative fraction num / den with den > 0, compared exactly.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator<(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b);
};

struct GroupStat {
  int y = 0;
  std::vector<int> s;
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct ConditionalRate {
  std::vector<int> s;
  int y = 0;
  int y_hat = 0;
  std::size_t hits = 0;
  std::size_t count = 0;
  double rate = 0.0;
};

struct FairnessReport {
  std::size_t count = 0;
  double accuracy = 0.0;
  double worst_group = 0.0;
  double eo = 0.0;
  std::vector<GroupStat> per_group;
  std::vector<ConditionalRate> conditional_rates;
  std::vector<std::string> warnings;
};

// Fraction of records with y_pred == y_true. Throws InvalidArgument when empty.
double Accuracy(std::span<const PredictionRecord> records);

// Minimum recall over every (y, s) combination of the observed target labels
// and observed spurious tuples. Throws EmptyGroup naming any combination
// without records.
double WorstGroupAccuracy(std::span<const PredictionRecord> records);

// Max over y, y_hat and pairs of spurious tuples of
// |P(Y_hat = y_hat | Y = y, S = s_i) - P(Y_hat = y_hat | Y = y, S = s_j)|.
// y_hat ranges over every label seen as a truth or a prediction. Strata with
// no records are left out and reported through `warnings`.
Rational EqualizedOddsExact(std::span<const PredictionRecord> records,
                            std::vector<std::string>* warnings = nullptr);
double EqualizedOdds(std::span<const PredictionRecord> records,
                     std::vector<std::string>* warnings = nullptr);

FairnessReport Evaluate(std::span<const PredictionRecord> records);

// Records from parallel label arrays; s_flat holds num_spurious labels per row.
std::vector<PredictionRecord> MakeRecords(std::span<const int> y_true,
                                          std::span<const int> y_pred,
                                          std::span<const int> s_flat,
                                          std::size_t num_spurious);

std::string FormatGroup(int y, const std::vector<int>& s);

}  // namespace fairlatent

#endif  // FAIRLATENT_METRICS_HPP_
