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


#include "fairlatent/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "fairlatent/error.hpp"

namespace fairlatent {
namespace {

constexpr double kApproxWolfeEps = 1e-10;
constexpr double kCurvature = 0.9;

}  // namespace

LbfgsMinimizer::LbfgsMinimizer(Eigen::VectorXd x0, LbfgsOptions options)
    : options_(options), x_(std::move(x0)) {
  if (options_.memory == 0) throw InvalidArgument("L-BFGS memory must be >= 1");
  if (!(options_.grad_tol > 0.0)) throw InvalidArgument("grad_tol must be positive");
  if (!x_.allFinite()) throw InvalidArgument("L-BFGS start point is not finite");
  trial_ = x_;
}

Eigen::VectorXd LbfgsMinimizer::Direction() const {
  Eigen::VectorXd q = -g_;
  const std::size_t m = s_.size();
  std::vector<double> alpha(m);
  for (std::size_t i = m; i-- > 0;) {
    alpha[i] = rho_[i] * s_[i].dot(q);
    q -= alpha[i] * y_[i];
  }
  if (m > 0) q *= s_.back().dot(y_.back()) / y_.back().squaredNorm();
  for (std::size_t i = 0; i < m; ++i) {
    const double beta = rho_[i] * y_[i].dot(q);
    q += (alpha[i] - beta) * s_[i];
  }
  return q;
}

void LbfgsMinimizer::StartLineSearch() {
  direction_ = Direction();
  slope_ = g_.dot(direction_);
  if (!(slope_ < 0.0)) {
    // Curvature pairs went stale; restart from steepest descent.
    s_.clear();
    y_.clear();
    rho_.clear();
    direction_ = -g_;
    slope_ = -g_.squaredNorm();
  }
  step_ = iterations_ == 0 ? std::min(1.0, 1.0 / g_.norm()) : 1.0;
  backtracks_ = 0;
  trial_ = x_ + step_ * direction_;
}

void LbfgsMinimizer::Accept(double value, const Eigen::VectorXd& grad) {
  f_ = value;
  g_ = grad;
  accepted_.push_back(value);
  if (g_.norm() <= options_.grad_tol) {
    status_ = LbfgsStatus::kConverged;
    return;
  }
  if (iterations_ >= options_.max_iters) {
    status_ = LbfgsStatus::kMaxIters;
    return;
  }
  StartLineSearch();
}

bool LbfgsMinimizer::Tell(double value, const Eigen::VectorXd& grad) {
  if (done()) return false;
  ++evaluations_;
  const bool finite = std::isfinite(value) && grad.allFinite();
  if (!have_start_) {
    have_start_ = true;
    if (!finite) {
      status_ = LbfgsStatus::kNonFinite;
      return false;
    }
    Accept(value, grad);
    return !done();
  }
  // Near the optimum the sufficient decrease falls below the rounding of f,
  // so Armijo alone would backtrack forever. The approximate Wolfe test then
  // decides from the directional derivative, which stays accurate.
  const bool armijo = value <= f_ + options_.armijo * step_ * slope_;
  const bool approx_wolfe =
      value <= f_ + kApproxWolfeEps * std::abs(f_) &&
      grad.dot(direction_) <= (2.0 * options_.armijo - 1.0) * slope_ &&
      grad.dot(direction_) >= kCurvature * slope_;
  if (finite && (armijo || approx_wolfe)) {
    Eigen::VectorXd s = trial_ - x_;
    Eigen::VectorXd y = grad - g_;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (s_.size() == options_.memory) {
        s_.pop_front();
        y_.pop_front();
        rho_.pop_front();
      }
      s_.push_back(std::move(s));
      y_.push_back(std::move(y));
      rho_.push_back(1.0 / sy);
    }
    x_ = trial_;
    ++iterations_;
    Accept(value, grad);
    return !done();
  }
  if (++backtracks_ > options_.max_backtracks) {
    status_ = LbfgsStatus::kLineSearchFailed;
    trial_ = x_;
    return false;
  }
  step_ *= 0.5;
  trial_ = x_ + step_ * direction_;
  return true;
}

LbfgsMinimizer Minimize(const ObjectiveFn& objective, Eigen::VectorXd x0,
                        const LbfgsOptions& options) {
  LbfgsMinimizer minimizer(std::move(x0), options);
  Eigen::VectorXd grad(minimizer.point().size());
  while (true) {
    const double value = objective(minimizer.point(), grad);
    if (!minimizer.Tell(value, grad)) break;
  }
  return minimizer;
}

}  // namespace fairlatent
