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


#ifndef FAIRLATENT_LOGREG_HPP_
#define FAIRLATENT_LOGREG_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fairlatent/latent_world.hpp"

namespace fairlatent {

// How the ridge term is weighed against the data term.
//   kMeanLoss: (1/n) sum softplus(-y w.z) + lambda/2 |w|^2
//   kSumLoss:        sum softplus(-y w.z) + lambda/2 |w|^2
// A sum_loss lambda equals a mean_loss lambda of lambda / n.
enum class LossConvention { kMeanLoss, kSumLoss };

const char* ToString(LossConvention convention);
LossConvention ParseLossConvention(const std::string& text);

struct RegressionConfig {
  double lambda = 1.0;
  LossConvention convention = LossConvention::kSumLoss;
  // The intercept, when enabled, is the last parameter and is not penalized.
  bool intercept = false;
  // Tolerance on the gradient norm of the per-sample (mean) form of the
  // objective, so that it means the same thing under both conventions.
  double tol = 1e-8;
  std::size_t max_iters = 10000;

  void Validate() const;
  // lambda expressed in the mean_loss convention for a dataset of size n.
  double EffectiveMeanLambda(std::size_t n) const;
};

struct FittedDirection {
  Eigen::VectorXd w;
  double intercept = 0.0;
  double lambda = 0.0;
  LossConvention convention = LossConvention::kSumLoss;
  bool converged = false;
  // Gradient norm at w, in the same per-sample units as RegressionConfig::tol.
  double final_grad_norm = 0.0;
  std::size_t iterations = 0;
  std::optional<double> beta_clf;
  // Objective at the start point and after every accepted step.
  std::vector<double> objective_trace;
};

// Objective and gradient over an explicit design matrix with labels in
// {-1, +1}. `params` holds w followed by the intercept when enabled.
double Objective(const Eigen::VectorXd& params, const RowMatrix& x,
                 std::span<const int> y, const RegressionConfig& cfg);
Eigen::VectorXd Gradient(const Eigen::VectorXd& params, const RowMatrix& x,
                         std::span<const int> y, const RegressionConfig& cfg);

double Objective(const Eigen::VectorXd& params, const Dataset& data,
                 const RegressionConfig& cfg);
Eigen::VectorXd Gradient(const Eigen::VectorXd& params, const Dataset& data,
                         const RegressionConfig& cfg);

FittedDirection Fit(const RowMatrix& x, std::span<const int> y,
                    const RegressionConfig& cfg);
// Fits on the dataset's target labels and fills in beta_clf.
FittedDirection Fit(const Dataset& data, const RegressionConfig& cfg);

// Fits several configurations on the same data. The solvers advance in
// lockstep so each pass over the data serves all of them; every result is
// a deterministic function of (data, its own config, the config list).
std::vector<FittedDirection> FitPath(const RowMatrix& x, std::span<const int> y,
                                     std::span<const RegressionConfig> cfgs);
std::vector<FittedDirection> FitPath(const Dataset& data,
                                     std::span<const RegressionConfig> cfgs);

// |w on spurious blocks| / |w on stable block|. Throws InvalidArgument when
// the stable part is zero.
double BiasDegree(const Eigen::VectorXd& w, const SubspaceMap& map);
double BiasDegree(const FittedDirection& dir, const SubspaceMap& map);

// Multinomial logistic regression with an unpenalized per-class bias and a
// mean-loss ridge on the weights.
struct SoftmaxModel {
  Eigen::MatrixXd weights;  // features x classes
  Eigen::VectorXd bias;     // classes
  std::vector<int> classes;  // sorted label values
  bool converged = false;
  double final_grad_norm = 0.0;
  std::size_t iterations = 0;

  // Label with the largest affine score; ties go to the smaller label.
  int Predict(std::span<const double> features) const;
  std::vector<int> PredictAll(const RowMatrix& features) const;
};

struct SoftmaxConfig {
  double ridge = 1e-3;
  double tol = 1e-8;
  std::size_t max_iters = 10000;
};

SoftmaxModel FitSoftmax(const RowMatrix& x, std::span<const int> labels,
                        const SoftmaxConfig& cfg);
double SoftmaxObjective(const Eigen::VectorXd& params, const RowMatrix& x,
                        std::span<const int> class_index, std::size_t classes,
                        double ridge, Eigen::VectorXd* grad);

}  // namespace fairlatent

#endif  // FAIRLATENT_LOGREG_HPP_
