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


#ifndef FAIRLATENT_DIRECTION_COMBINER_HPP_
#define FAIRLATENT_DIRECTION_COMBINER_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fairlatent/latent_world.hpp"
#include "fairlatent/logreg.hpp"

namespace fairlatent {

// Signed projections of a direction on the class-mean axes:
// w_y = <w_stable, 1> / sqrt(d_stable), w_s = <w_spurious, 1> / sqrt(d_spurious),
// where the spurious part concatenates all spurious blocks.
struct AxisComponents {
  double w_y = 0.0;
  double w_s = 0.0;
};

AxisComponents ReduceToAxes(const Eigen::VectorXd& w, const SubspaceMap& map);

enum class CombineSource { kAnalytic, kGridSearch };
const char* ToString(CombineSource source);

struct CombinedDirection {
  double c1 = 0.0;
  double c2 = 0.0;
  // normalize(c1 w1 - c2 w2), oriented so its spurious projection is positive.
  Eigen::VectorXd n_cmb;
  CombineSource source = CombineSource::kAnalytic;
  std::optional<double> consistency;
  // |stable part| / |spurious part| of n_cmb, when a subspace map is known.
  std::optional<double> residual;
  // True when the orientation was fixed by a subspace map.
  bool oriented = false;
};

// Closed-form coefficients cancelling the stable axis:
// c1 = w_y2 / D, c2 = w_y1 / D with D = w_y2 w_s1 - w_y1 w_s2. Throws
// DegenerateCombination when |D| < 1e-12.
std::pair<double, double> ClosedFormCoefficients(const AxisComponents& w1,
                                                 const AxisComponents& w2);

CombinedDirection CombineAnalytic(const Eigen::VectorXd& w1, const Eigen::VectorXd& w2,
                                  const SubspaceMap& map);
CombinedDirection CombineAnalytic(const FittedDirection& w1, const FittedDirection& w2,
                                  const SubspaceMap& map);

// The grid ratio r with normalize(n1 - r n2) == n_cmb for an analytic result:
// r = c2 |w2| / (c1 |w1|).
double ImpliedGridRatio(const CombinedDirection& combined, const Eigen::VectorXd& w1,
                        const Eigen::VectorXd& w2);

// Stable-block residual |proj_stable(v)| / |proj_spurious(v)|.
double StableResidual(const Eigen::VectorXd& v, const SubspaceMap& map);

// Fraction of the 2 * rows edits z +- degree * direction on which the oracle
// keeps its prediction on the unedited z.
double ConsistencyScore(const Eigen::VectorXd& direction, const RowMatrix& probes,
                        double degree, const OracleModel& oracle);

struct GridSearchConfig {
  std::vector<double> ratio_grid = DefaultRatioGrid();
  std::size_t probe_count = 100;
  // Fixed edit degree; when unset each candidate is scored at its own
  // calibrated alpha_u.
  std::optional<double> edit_degree;
  double coverage = 0.5;
  std::uint32_t repetition = 0;

  static std::vector<double> DefaultRatioGrid();
  void Validate() const;
};

struct GridPoint {
  double ratio = 0.0;
  double score = 0.0;
  double degree = 0.0;
  bool skipped = false;
};

struct GridSearchResult {
  CombinedDirection best;
  double best_ratio = 0.0;
  std::vector<GridPoint> trace;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

// Scores normalize(n1 - r n2) for each grid ratio against the oracle on
// probes drawn from `data`, and returns the best candidate (c1 = 1, c2 = r).
// Ties go to the smaller ratio.
GridSearchResult GridSearch(const Eigen::VectorXd& w1, const Eigen::VectorXd& w2,
                            const GridSearchConfig& cfg, const Dataset& data,
                            const OracleModel& oracle);

// Indices of `count` distinct samples chosen by a seeded shuffle.
std::vector<std::size_t> SampleProbeIndices(std::size_t n, std::size_t count,
                                            std::uint64_t seed, std::uint32_t repetition);

}  // namespace fairlatent

#endif  // FAIRLATENT_DIRECTION_COMBINER_HPP_
