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


#ifndef FAIRLATENT_OPTIMIZER_HPP_
#define FAIRLATENT_OPTIMIZER_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace fairlatent {

struct LbfgsOptions {
  std::size_t memory = 10;
  // Stop once the gradient norm is at or below this value.
  double grad_tol = 1e-8;
  std::size_t max_iters = 10000;
  // Sufficient-decrease constant of the backtracking line search.
  double armijo = 1e-4;
  std::size_t max_backtracks = 60;
};

enum class LbfgsStatus {
  kRunning,
  kConverged,
  kMaxIters,
  // No step satisfied sufficient decrease; usually round-off near the optimum.
  kLineSearchFailed,
  kNonFinite,
};

// Limited-memory BFGS with Armijo backtracking, in reverse-communication
// form: the caller evaluates the objective at point() and reports it back
// through Tell(). This lets several independent problems share one pass over
// a data matrix. Accepted objective values never increase.
class LbfgsMinimizer {
 public:
  LbfgsMinimizer(Eigen::VectorXd x0, LbfgsOptions options);

  // Point at which the next evaluation is requested.
  const Eigen::VectorXd& point() const { return trial_; }
  // Reports f and its gradient at point(). Returns true while more
  // evaluations are needed.
  bool Tell(double value, const Eigen::VectorXd& grad);

  LbfgsStatus status() const { return status_; }
  bool done() const { return status_ != LbfgsStatus::kRunning; }
  // Last accepted iterate and its value and gradient.
  const Eigen::VectorXd& x() const { return x_; }
  double value() const { return f_; }
  const Eigen::VectorXd& gradient() const { return g_; }
  double grad_norm() const { return g_.norm(); }
  std::size_t iterations() const { return iterations_; }
  std::size_t evaluations() const { return evaluations_; }
  // Objective value at the start point followed by every accepted step.
  const std::vector<double>& accepted_values() const { return accepted_; }

 private:
  void Accept(double value, const Eigen::VectorXd& grad);
  void StartLineSearch();
  Eigen::VectorXd Direction() const;

  LbfgsOptions options_;
  LbfgsStatus status_ = LbfgsStatus::kRunning;
  bool have_start_ = false;
  Eigen::VectorXd x_, g_, direction_, trial_;
  double f_ = 0.0;
  double step_ = 1.0;
  double slope_ = 0.0;
  std::size_t backtracks_ = 0;
  std::size_t iterations_ = 0;
  std::size_t evaluations_ = 0;
  std::deque<Eigen::VectorXd> s_, y_;
  std::deque<double> rho_;
  std::vector<double> accepted_;
};

using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Drives an LbfgsMinimizer to completion on a single objective.
LbfgsMinimizer Minimize(const ObjectiveFn& objective, Eigen::VectorXd x0,
                        const LbfgsOptions& options);

}  // namespace fairlatent

#endif  // FAIRLATENT_OPTIMIZER_HPP_
