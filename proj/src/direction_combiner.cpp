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


#include "fairlatent/direction_combiner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "fairlatent/augment.hpp"
#include "fairlatent/error.hpp"
#include "fairlatent/rng.hpp"

namespace fairlatent {
namespace {

constexpr double kDegenerateDenominator = 1e-12;

double SpuriousSum(const Eigen::VectorXd& v, const SubspaceMap& map) {
  double sum = 0.0;
  for (const IndexRange& r : map.spurious) {
    sum += v.segment(static_cast<Eigen::Index>(r.begin),
                     static_cast<Eigen::Index>(r.size()))
               .sum();
  }
  return sum;
}

void CheckDim(const Eigen::VectorXd& v, const SubspaceMap& map) {
  if (static_cast<std::size_t>(v.size()) != map.dim) {
    throw DimensionMismatch(
        fmt::format("direction has {} entries, map covers {}", v.size(), map.dim));
  }
}

// Unit vector along v with a positive spurious projection.
Eigen::VectorXd Orient(Eigen::VectorXd v, const SubspaceMap& map) {
  v /= v.norm();
  if (SpuriousSum(v, map) < 0.0) v = -v;
  return v;
}

}  // namespace

AxisComponents ReduceToAxes(const Eigen::VectorXd& w, const SubspaceMap& map) {
  CheckDim(w, map);
  std::size_t spurious_dim = 0;
  for (const IndexRange& r : map.spurious) spurious_dim += r.size();
  AxisComponents out;
  out.w_y = w.segment(static_cast<Eigen::Index>(map.stable.begin),
                      static_cast<Eigen::Index>(map.stable.size()))
                .sum() /
            std::sqrt(static_cast<double>(map.stable.size()));
  out.w_s = SpuriousSum(w, map) / std::sqrt(static_cast<double>(spurious_dim));
  return out;
}

const char* ToString(CombineSource source) {
  return source == CombineSource::kAnalytic ? "analytic" : "grid_search";
}

std::pair<double, double> ClosedFormCoefficients(const AxisComponents& w1,
                                                 const AxisComponents& w2) {
  const double denom = w2.w_y * w1.w_s - w1.w_y * w2.w_s;
  if (!(std::abs(denom) >= kDegenerateDenominator)) {
    throw DegenerateCombination(fmt::format(
        "directions are parallel in the reduced space (denominator {:.3e})", denom));
  }
  return {w2.w_y / denom, w1.w_y / denom};
}

double StableResidual(const Eigen::VectorXd& v, const SubspaceMap& map) {
  CheckDim(v, map);
  const double stable = v.segment(static_cast<Eigen::Index>(map.stable.begin),
                                  static_cast<Eigen::Index>(map.stable.size()))
                            .norm();
  double spurious_sq = 0.0;
  for (const IndexRange& r : map.spurious) {
    spurious_sq += v.segment(static_cast<Eigen::Index>(r.begin),
                             static_cast<Eigen::Index>(r.size()))
                       .squaredNorm();
  }
  if (!(spurious_sq > 0.0)) {
    throw DegenerateCombination("combined direction has no spurious component");
  }
  return stable / std::sqrt(spurious_sq);
}

CombinedDirection CombineAnalytic(const Eigen::VectorXd& w1, const Eigen::VectorXd& w2,
                                  const SubspaceMap& map) {
  CheckDim(w1, map);
  CheckDim(w2, map);
  const auto [c1, c2] = ClosedFormCoefficients(ReduceToAxes(w1, map), ReduceToAxes(w2, map));
  Eigen::VectorXd w = c1 * w1 - c2 * w2;
  if (!(w.norm() > 0.0) || !w.allFinite()) {
    throw DegenerateCombination("combined direction is zero");
  }
  CombinedDirection out;
  out.c1 = c1;
  out.c2 = c2;
  out.n_cmb = Orient(std::move(w), map);
  out.source = CombineSource::kAnalytic;
  out.residual = StableResidual(out.n_cmb, map);
  out.oriented = true;
  return out;
}

CombinedDirection CombineAnalytic(const FittedDirection& w1, const FittedDirection& w2,
                                  const SubspaceMap& map) {
  return CombineAnalytic(w1.w, w2.w, map);
}

double ImpliedGridRatio(const CombinedDirection& combined, const Eigen::VectorXd& w1,
                        const Eigen::VectorXd& w2) {
  return combined.c2 * w2.norm() / (combined.c1 * w1.norm());
}

double ConsistencyScore(const Eigen::VectorXd& direction, const RowMatrix& probes,
                        double degree, const OracleModel& oracle) {
  if (probes.rows() == 0) throw InvalidArgument("consistency_score: no probes");
  if (direction.size() != probes.cols()) {
    throw DimensionMismatch("consistency_score: direction and probe dimensions differ");
  }
  const std::size_t dim = static_cast<std::size_t>(probes.cols());
  Eigen::VectorXd edited(probes.cols());
  std::size_t kept = 0;
  for (Eigen::Index i = 0; i < probes.rows(); ++i) {
    const Eigen::VectorXd z = probes.row(i).transpose();
    const int base = oracle.Predict({z.data(), dim});
    for (double sign : {1.0, -1.0}) {
      edited = z + (sign * degree) * direction;
      if (oracle.Predict({edited.data(), dim}) == base) ++kept;
    }
  }
  return static_cast<double>(kept) / static_cast<double>(2 * probes.rows());
}

std::vector<double> GridSearchConfig::DefaultRatioGrid() {
  std::vector<double> grid;
  for (int i = 5; i <= 15; ++i) grid.push_back(i / 10.0);
  return grid;
}

void GridSearchConfig::Validate() const {
  if (ratio_grid.empty()) throw InvalidArgument("grid_search: empty ratio grid");
  if (probe_count == 0) throw InvalidArgument("grid_search: probe_count must be >= 1");
  if (edit_degree && !(*edit_degree > 0.0)) {
    throw InvalidArgument("grid_search: edit_degree must be positive");
  }
  if (!(coverage > 0.0 && coverage <= 1.0)) {
    throw InvalidArgument("grid_search: coverage must lie in (0, 1]");
  }
}

std::vector<std::size_t> SampleProbeIndices(std::size_t n, std::size_t count,
                                            std::uint64_t seed, std::uint32_t repetition) {
  if (count > n) {
    throw InvalidArgument(
        fmt::format("grid_search: {} probes requested from {} samples", count, n));
  }
  std::vector<std::size_t> index(n);
  std::iota(index.begin(), index.end(), 0);
  CounterRng rng(StreamId{seed, StreamDomain::kGridProbes, repetition, 0}, 0);
  // Partial Fisher-Yates: the first `count` slots end up uniformly chosen.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.Below(n - i));
    std::swap(index[i], index[j]);
  }
  index.resize(count);
  return index;
}

GridSearchResult GridSearch(const Eigen::VectorXd& w1, const Eigen::VectorXd& w2,
                            const GridSearchConfig& cfg, const Dataset& data,
                            const OracleModel& oracle) {
  cfg.Validate();
  const SubspaceMap& map = data.subspace_map();
  CheckDim(w1, map);
  CheckDim(w2, map);
  if (!(w1.norm() > 0.0) || !(w2.norm() > 0.0)) {
    throw DegenerateCombination("grid_search: an input direction is zero");
  }
  const Eigen::VectorXd n1 = w1 / w1.norm();
  const Eigen::VectorXd n2 = w2 / w2.norm();

  const std::vector<std::size_t> picks =
      SampleProbeIndices(data.size(), cfg.probe_count, data.spec().seed, cfg.repetition);
  RowMatrix probes(static_cast<Eigen::Index>(picks.size()), data.z().cols());
  for (std::size_t i = 0; i < picks.size(); ++i) {
    probes.row(static_cast<Eigen::Index>(i)) =
        data.z().row(static_cast<Eigen::Index>(picks[i]));
  }

  GridSearchResult result;
  bool have_best = false;
  Eigen::VectorXd best_direction;
  for (double ratio : cfg.ratio_grid) {
    GridPoint point;
    point.ratio = ratio;
    Eigen::VectorXd candidate = n1 - ratio * n2;
    if (!(candidate.norm() >= 1e-12)) {
      point.skipped = true;
      ++result.skipped;
      result.warnings.push_back(
          fmt::format("grid ratio {} gives a zero direction; skipped", ratio));
      result.trace.push_back(point);
      continue;
    }
    candidate = Orient(std::move(candidate), map);
    if (cfg.edit_degree) {
      point.degree = *cfg.edit_degree;
    } else {
      try {
        point.degree = CalibrateRange(data, candidate, cfg.coverage).alpha_u;
      } catch (const InvalidArgument&) {
        point.skipped = true;
        ++result.skipped;
        result.warnings.push_back(fmt::format(
            "grid ratio {} does not separate the spurious classes; skipped", ratio));
        result.trace.push_back(point);
        continue;
      }
    }
    point.score = ConsistencyScore(candidate, probes, point.degree, oracle);
    result.trace.push_back(point);
    const bool better = !have_best || point.score > result.best.consistency.value() ||
                        (point.score == result.best.consistency.value() &&
                         ratio < result.best_ratio);
    if (better) {
      have_best = true;
      result.best_ratio = ratio;
      result.best.consistency = point.score;
      best_direction = candidate;
    }
  }
  if (!have_best) {
    throw DegenerateCombination("grid_search: every grid candidate was skipped");
  }
  result.best.c1 = 1.0;
  result.best.c2 = result.best_ratio;
  result.best.n_cmb = std::move(best_direction);
  result.best.source = CombineSource::kGridSearch;
  result.best.residual = StableResidual(result.best.n_cmb, map);
  result.best.oriented = true;
  return result;
}

}  // namespace fairlatent
