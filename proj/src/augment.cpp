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

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "fairlatent/error.hpp"

namespace fairlatent {
namespace {

// Linear interpolation between order statistics of sorted values.
double Quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

void CheckDirection(const Eigen::VectorXd& direction, std::size_t dim) {
  if (static_cast<std::size_t>(direction.size()) != dim) {
    throw DimensionMismatch(fmt::format("direction has {} entries, latent has {}",
                                        direction.size(), dim));
  }
}

}  // namespace

void AugmentConfig::Validate() const {
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw InvalidArgument("augment: noise_std must be finite and >= 0");
  }
  // Noise-only views never draw a degree.
  if (!generative) return;
  if (!(alpha_l > 0.0) || !(alpha_l <= alpha_u) || !std::isfinite(alpha_u)) {
    throw InvalidArgument(fmt::format(
        "augment: need 0 < alpha_l <= alpha_u, got [{}, {}]", alpha_l, alpha_u));
  }
  if (integer_degrees && std::ceil(alpha_l) > std::floor(alpha_u)) {
    throw InvalidArgument(fmt::format(
        "augment: no integer degree in [{}, {}]", alpha_l, alpha_u));
  }
}

AlphaRange CalibrateRange(const RowMatrix& z, std::span<const int> s,
                          const Eigen::VectorXd& direction, double coverage) {
  if (z.rows() == 0) throw InvalidArgument("calibrate_range: empty dataset");
  if (static_cast<std::size_t>(z.rows()) != s.size()) {
    throw DimensionMismatch("calibrate_range: row and label counts differ");
  }
  CheckDirection(direction, static_cast<std::size_t>(z.cols()));
  if (!(coverage > 0.0 && coverage <= 1.0)) {
    throw InvalidArgument("calibrate_range: coverage must lie in (0, 1]");
  }
  const Eigen::VectorXd proj = z * direction;
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < s.size(); ++i) {
    (s[i] > 0 ? pos : neg).push_back(proj[static_cast<Eigen::Index>(i)]);
  }
  if (pos.empty() || neg.empty()) {
    throw InvalidArgument("calibrate_range: both spurious classes must be present");
  }
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  const double gap = Quantile(pos, coverage) - Quantile(neg, 1.0 - coverage);
  if (!(gap > 0.0)) {
    throw InvalidArgument(fmt::format(
        "calibrate_range: spurious classes do not separate along the direction "
        "(gap {})",
        gap));
  }
  return {gap / 2.0, gap};
}

AlphaRange CalibrateRange(const Dataset& data, const Eigen::VectorXd& direction,
                          double coverage, std::size_t block) {
  return CalibrateRange(data.z(), data.spurious_labels(block), direction, coverage);
}

Eigen::VectorXd EditLatent(const Eigen::VectorXd& z, const Eigen::VectorXd& direction,
                           double alpha) {
  CheckDirection(direction, static_cast<std::size_t>(z.size()));
  return z + alpha * direction;
}

double SampleDegree(const AugmentConfig& cfg, CounterRng& rng) {
  if (cfg.integer_degrees) {
    const double lo = std::ceil(cfg.alpha_l);
    const double hi = std::floor(cfg.alpha_u);
    const auto count = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<double>(rng.Below(count));
  }
  return rng.Uniform(cfg.alpha_l, cfg.alpha_u);
}

void SampleViewsInto(std::span<const double> z, const Eigen::VectorXd& direction,
                     const AugmentConfig& cfg, CounterRng& rng, double* view1,
                     double* view2, double* alpha1, double* alpha2) {
  CheckDirection(direction, z.size());
  double a1 = 0.0;
  double a2 = 0.0;
  if (cfg.generative) {
    a1 = SampleDegree(cfg, rng);
    a2 = SampleDegree(cfg, rng);
  }
  const std::size_t dim = z.size();
  for (std::size_t c = 0; c < dim; ++c) {
    view1[c] = z[c] + a1 * direction[static_cast<Eigen::Index>(c)];
  }
  for (std::size_t c = 0; c < dim; ++c) {
    view2[c] = z[c] - a2 * direction[static_cast<Eigen::Index>(c)];
  }
  if (cfg.noise_std > 0.0) {
    for (std::size_t c = 0; c < dim; ++c) view1[c] += cfg.noise_std * rng.Normal();
    for (std::size_t c = 0; c < dim; ++c) view2[c] += cfg.noise_std * rng.Normal();
  }
  if (alpha1 != nullptr) *alpha1 = a1;
  if (alpha2 != nullptr) *alpha2 = a2;
}

ViewPair SampleViews(const Eigen::VectorXd& z, const Eigen::VectorXd& direction,
                     const AugmentConfig& cfg, CounterRng& rng) {
  cfg.Validate();
  ViewPair out;
  out.view1.resize(z.size());
  out.view2.resize(z.size());
  SampleViewsInto({z.data(), static_cast<std::size_t>(z.size())}, direction, cfg, rng,
                  out.view1.data(), out.view2.data(), &out.alpha1, &out.alpha2);
  return out;
}

CounterRng ViewStream(const AugmentConfig& cfg, std::size_t index, std::size_t epoch) {
  return CounterRng(StreamId{cfg.seed, StreamDomain::kAugment, cfg.repetition,
                             static_cast<std::uint32_t>(epoch)},
                    static_cast<std::uint32_t>(index));
}

}  // namespace fairlatent
