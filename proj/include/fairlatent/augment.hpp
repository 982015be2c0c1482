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


#ifndef FAIRLATENT_AUGMENT_HPP_
#define FAIRLATENT_AUGMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "fairlatent/latent_world.hpp"
#include "fairlatent/rng.hpp"

namespace fairlatent {

struct AugmentConfig {
  double alpha_l = 1.0;
  double alpha_u = 2.0;
  // Draw degrees uniformly from the integers in [ceil(alpha_l), floor(alpha_u)].
  bool integer_degrees = false;
  // Std of the isotropic noise standing in for non-semantic augmentation.
  double noise_std = 0.0;
  // When false the views carry noise only (no edit along the direction).
  bool generative = true;
  std::uint64_t seed = 0;
  std::uint32_t repetition = 0;

  void Validate() const;
};

struct AlphaRange {
  double alpha_l = 0.0;
  double alpha_u = 0.0;
};

// Projects samples on `direction` and sets alpha_u to the gap between the
// `coverage` quantile of the s = +1 projections and the (1 - coverage)
// quantile of the s = -1 projections; alpha_l = alpha_u / 2. Coverage 0.5 is
// the distance between class medians. Throws InvalidArgument when the gap is
// not positive, i.e. the direction does not separate the classes.
AlphaRange CalibrateRange(const RowMatrix& z, std::span<const int> s,
                          const Eigen::VectorXd& direction, double coverage);
// Uses the labels of spurious block `block`.
AlphaRange CalibrateRange(const Dataset& data, const Eigen::VectorXd& direction,
                          double coverage, std::size_t block = 0);

// z + alpha * direction.
Eigen::VectorXd EditLatent(const Eigen::VectorXd& z, const Eigen::VectorXd& direction,
                           double alpha);

// One editing degree from the configured range.
double SampleDegree(const AugmentConfig& cfg, CounterRng& rng);

struct ViewPair {
  Eigen::VectorXd view1;
  Eigen::VectorXd view2;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
};

// view1 = z + a' n + e1, view2 = z - a'' n + e2 with a', a'' drawn from the
// configured range and e ~ Normal(0, noise_std^2 I). Draw order: a', a'',
// e1, e2.
ViewPair SampleViews(const Eigen::VectorXd& z, const Eigen::VectorXd& direction,
                     const AugmentConfig& cfg, CounterRng& rng);
// Same draws, written into caller-provided buffers of z's length.
void SampleViewsInto(std::span<const double> z, const Eigen::VectorXd& direction,
                     const AugmentConfig& cfg, CounterRng& rng, double* view1,
                     double* view2, double* alpha1 = nullptr,
                     double* alpha2 = nullptr);

// Stream used for sample `index` in training epoch `epoch`.
CounterRng ViewStream(const AugmentConfig& cfg, std::size_t index, std::size_t epoch);

}  // namespace fairlatent

#endif  // FAIRLATENT_AUGMENT_HPP_
