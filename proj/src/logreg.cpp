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


#include "fairlatent/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "fairlatent/error.hpp"
#include "fairlatent/optimizer.hpp"

namespace fairlatent {
namespace {

constexpr Eigen::Index kRowBlock = 256;

// log(1 + exp(-m)) without overflow.
inline double SoftplusNeg(double m) {
  return std::max(-m, 0.0) + std::log1p(std::exp(-std::abs(m)));
}

// 1 / (1 + exp(m)).
inline double SigmoidNeg(double m) {
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

// Evaluating the objective is fine on one class; fitting is not.
void CheckLabels(const RowMatrix& x, std::span<const int> y, bool need_both) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw DimensionMismatch(
        fmt::format("logreg: {} rows but {} labels", x.rows(), y.size()));
  }
  if (y.empty()) throw InvalidArgument("logreg: empty dataset");
  bool pos = false;
  bool neg = false;
  for (int label : y) {
    if (label == 1) {
      pos = true;
    } else if (label == -1) {
      neg = true;
    } else {
      throw InvalidArgument("logreg: labels must be -1 or +1");
    }
  }
  if (need_both && (!pos || !neg)) throw InvalidArgument("logreg: both classes must be present");
}

std::size_t ParamCount(const RowMatrix& x, const RegressionConfig& cfg) {
  return static_cast<std::size_t>(x.cols()) + (cfg.intercept ? 1 : 0);
}

double LossScale(const RegressionConfig& cfg, std::size_t n) {
  return cfg.convention == LossConvention::kSumLoss ? 1.0
                                                     : 1.0 / static_cast<double>(n);
}

// Factor that turns an objective gradient norm into per-sample units.
double PerSampleFactor(const RegressionConfig& cfg, std::size_t n) {
  return cfg.convention == LossConvention::kSumLoss ? 1.0 / static_cast<double>(n)
                                                     : 1.0;
}

// Evaluates K problems at once. Column k of `w` holds the weights of problem
// k and b[k] its intercept (zero when disabled). Outputs raw data-term sums.
void DataTermBatch(const RowMatrix& x, std::span<const int> y,
                   const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                   Eigen::VectorXd& loss, Eigen::MatrixXd& grad_w,
                   Eigen::VectorXd& grad_b) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = w.cols();
  loss.setZero(k);
  grad_w.setZero(x.cols(), k);
  grad_b.setZero(k);
  Eigen::MatrixXd margins(kRowBlock, k);
  for (Eigen::Index start = 0; start < n; start += kRowBlock) {
    const Eigen::Index rows = std::min(kRowBlock, n - start);
    const auto block = x.middleRows(start, rows);
    margins.topRows(rows).noalias() = block * w;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double label = y[static_cast<std::size_t>(start + i)];
      for (Eigen::Index c = 0; c < k; ++c) {
        const double m = label * (margins(i, c) + b[c]);
        loss[c] += SoftplusNeg(m);
        margins(i, c) = -label * SigmoidNeg(m);
      }
    }
    grad_w.noalias() += block.transpose() * margins.topRows(rows);
    grad_b += margins.topRows(rows).colwise().sum().transpose();
  }
}

struct Evaluation {
  double value;
  Eigen::VectorXd grad;
};

std::vector<Evaluation> EvaluateBatch(const RowMatrix& x, std::span<const int> y,
                                      const std::vector<const RegressionConfig*>& cfgs,
                                      const std::vector<const Eigen::VectorXd*>& params) {
  const Eigen::Index d = x.cols();
  const Eigen::Index k = static_cast<Eigen::Index>(cfgs.size());
  Eigen::MatrixXd w(d, k);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::VectorXd& p = *params[static_cast<std::size_t>(c)];
    w.col(c) = p.head(d);
    if (cfgs[static_cast<std::size_t>(c)]->intercept) b[c] = p[d];
  }
  Eigen::VectorXd loss, grad_b;
  Eigen::MatrixXd grad_w;
  DataTermBatch(x, y, w, b, loss, grad_w, grad_b);
  std::vector<Evaluation> out(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c) {
    const RegressionConfig& cfg = *cfgs[static_cast<std::size_t>(c)];
    const double scale = LossScale(cfg, y.size());
    Evaluation& e = out[static_cast<std::size_t>(c)];
    e.value = scale * loss[c] + 0.5 * cfg.lambda * w.col(c).squaredNorm();
    e.grad.resize(params[static_cast<std::size_t>(c)]->size());
    e.grad.head(d) = scale * grad_w.col(c) + cfg.lambda * w.col(c);
    if (cfg.intercept) e.grad[d] = scale * grad_b[c];
  }
  return out;
}

void CheckParams(const Eigen::VectorXd& params, const RowMatrix& x,
                 const RegressionConfig& cfg) {
  if (static_cast<std::size_t>(params.size()) != ParamCount(x, cfg)) {
    throw DimensionMismatch(fmt::format("logreg: {} parameters, expected {}",
                                        params.size(), ParamCount(x, cfg)));
  }
  if (!params.allFinite()) throw InvalidArgument("logreg: non-finite parameters");
}

}  // namespace

const char* ToString(LossConvention convention) {
  return convention == LossConvention::kSumLoss ? "sum_loss" : "mean_loss";
}

LossConvention ParseLossConvention(const std::string& text) {
  if (text == "sum_loss") return LossConvention::kSumLoss;
  if (text == "mean_loss") return LossConvention::kMeanLoss;
  throw InvalidArgument(fmt::format("unknown loss convention '{}'", text));
}

void RegressionConfig::Validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("regression: lambda must be finite and >= 0");
  }
  if (!(tol > 0.0)) throw InvalidArgument("regression: tol must be positive");
  if (max_iters == 0) throw InvalidArgument("regression: max_iters must be >= 1");
}

double RegressionConfig::EffectiveMeanLambda(std::size_t n) const {
  return convention == LossConvention::kSumLoss ? lambda / static_cast<double>(n)
                                                : lambda;
}

double Objective(const Eigen::VectorXd& params, const RowMatrix& x,
                 std::span<const int> y, const RegressionConfig& cfg) {
  CheckLabels(x, y, false);
  CheckParams(params, x, cfg);
  return EvaluateBatch(x, y, {&cfg}, {&params})[0].value;
}

Eigen::VectorXd Gradient(const Eigen::VectorXd& params, const RowMatrix& x,
                         std::span<const int> y, const RegressionConfig& cfg) {
  CheckLabels(x, y, false);
  CheckParams(params, x, cfg);
  return EvaluateBatch(x, y, {&cfg}, {&params})[0].grad;
}

double Objective(const Eigen::VectorXd& params, const Dataset& data,
                 const RegressionConfig& cfg) {
  return Objective(params, data.z(), data.y(), cfg);
}

Eigen::VectorXd Gradient(const Eigen::VectorXd& params, const Dataset& data,
                         const RegressionConfig& cfg) {
  return Gradient(params, data.z(), data.y(), cfg);
}

std::vector<FittedDirection> FitPath(const RowMatrix& x, std::span<const int> y,
                                     std::span<const RegressionConfig> cfgs) {
  CheckLabels(x, y, true);
  const std::size_t n = y.size();
  std::vector<LbfgsMinimizer> solvers;
  solvers.reserve(cfgs.size());
  for (const RegressionConfig& cfg : cfgs) {
    cfg.Validate();
    LbfgsOptions options;
    options.max_iters = cfg.max_iters;
    options.grad_tol = cfg.tol / PerSampleFactor(cfg, n);
    solvers.emplace_back(
        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ParamCount(x, cfg))), options);
  }
  while (true) {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < solvers.size(); ++i) {
      if (!solvers[i].done()) active.push_back(i);
    }
    if (active.empty()) break;
    std::vector<const RegressionConfig*> batch_cfgs;
    std::vector<const Eigen::VectorXd*> batch_params;
    for (std::size_t i : active) {
      batch_cfgs.push_back(&cfgs[i]);
      batch_params.push_back(&solvers[i].point());
    }
    const std::vector<Evaluation> evals = EvaluateBatch(x, y, batch_cfgs, batch_params);
    for (std::size_t j = 0; j < active.size(); ++j) {
      solvers[active[j]].Tell(evals[j].value, evals[j].grad);
    }
  }
  std::vector<FittedDirection> out;
  out.reserve(cfgs.size());
  const Eigen::Index d = x.cols();
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    const LbfgsMinimizer& s = solvers[i];
    if (s.status() == LbfgsStatus::kNonFinite) {
      throw TrainingDiverged("logreg: objective is not finite at the start point");
    }
    FittedDirection dir;
    dir.w = s.x().head(d);
    dir.intercept = cfgs[i].intercept ? s.x()[d] : 0.0;
    dir.lambda = cfgs[i].lambda;
    dir.convention = cfgs[i].convention;
    dir.final_grad_norm = s.grad_norm() * PerSampleFactor(cfgs[i], n);
    // A stalled line search at a gradient already below tolerance still
    // counts; anything else (including max_iters) is reported unconverged.
    dir.converged = s.status() == LbfgsStatus::kConverged ||
                    dir.final_grad_norm <= cfgs[i].tol;
    dir.iterations = s.iterations();
    dir.objective_trace = s.accepted_values();
    out.push_back(std::move(dir));
  }
  return out;
}

std::vector<FittedDirection> FitPath(const Dataset& data,
                                     std::span<const RegressionConfig> cfgs) {
  std::vector<FittedDirection> out = FitPath(data.z(), data.y(), cfgs);
  for (FittedDirection& dir : out) {
    try {
      dir.beta_clf = BiasDegree(dir, data.subspace_map());
    } catch (const InvalidArgument&) {
      dir.beta_clf.reset();
    }
  }
  return out;
}

FittedDirection Fit(const RowMatrix& x, std::span<const int> y,
                    const RegressionConfig& cfg) {
  return FitPath(x, y, std::span<const RegressionConfig>(&cfg, 1)).front();
}

FittedDirection Fit(const Dataset& data, const RegressionConfig& cfg) {
  return FitPath(data, std::span<const RegressionConfig>(&cfg, 1)).front();
}

double BiasDegree(const Eigen::VectorXd& w, const SubspaceMap& map) {
  if (static_cast<std::size_t>(w.size()) != map.dim) {
    throw DimensionMismatch(
        fmt::format("bias_degree: w has {} entries, map covers {}", w.size(), map.dim));
  }
  const double stable =
      w.segment(static_cast<Eigen::Index>(map.stable.begin),
                static_cast<Eigen::Index>(map.stable.size()))
          .norm();
  double spurious_sq = 0.0;
  for (const IndexRange& r : map.spurious) {
    spurious_sq += w.segment(static_cast<Eigen::Index>(r.begin),
                             static_cast<Eigen::Index>(r.size()))
                       .squaredNorm();
  }
  if (!(stable > 0.0)) {
    throw InvalidArgument("bias_degree: stable block of w is zero");
  }
  return std::sqrt(spurious_sq) / stable;
}

double BiasDegree(const FittedDirection& dir, const SubspaceMap& map) {
  return BiasDegree(dir.w, map);
}

// Parameters are laid out as a (features + 1) x classes column-major matrix;
// the last row is the bias.
double SoftmaxObjective(const Eigen::VectorXd& params, const RowMatrix& x,
                        std::span<const int> class_index, std::size_t classes,
                        double ridge, Eigen::VectorXd* grad) {
  const Eigen::Index d = x.cols();
  const Eigen::Index c = static_cast<Eigen::Index>(classes);
  const Eigen::Index n = x.rows();
  Eigen::Map<const Eigen::MatrixXd> theta(params.data(), d + 1, c);
  const auto w = theta.topRows(d);
  const auto b = theta.row(d);
  Eigen::MatrixXd grad_w = Eigen::MatrixXd::Zero(d, c);
  Eigen::RowVectorXd grad_b = Eigen::RowVectorXd::Zero(c);
  double loss = 0.0;
  Eigen::MatrixXd scores(kRowBlock, c);
  for (Eigen::Index start = 0; start < n; start += kRowBlock) {
    const Eigen::Index rows = std::min(kRowBlock, n - start);
    const auto block = x.middleRows(start, rows);
    scores.topRows(rows).noalias() = block * w;
    for (Eigen::Index i = 0; i < rows; ++i) {
      auto s = scores.row(i);
      s += b;
      const double top = s.maxCoeff();
      double total = 0.0;
      for (Eigen::Index j = 0; j < c; ++j) {
        s[j] = std::exp(s[j] - top);
        total += s[j];
      }
      const int label = class_index[static_cast<std::size_t>(start + i)];
      loss += std::log(total) - std::log(s[label]);
      s /= total;
      s[label] -= 1.0;
    }
    grad_w.noalias() += block.transpose() * scores.topRows(rows);
    grad_b += scores.topRows(rows).colwise().sum();
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  if (grad != nullptr) {
    grad->resize(params.size());
    Eigen::Map<Eigen::MatrixXd> g(grad->data(), d + 1, c);
    g.topRows(d) = inv_n * grad_w + ridge * w;
    g.row(d) = inv_n * grad_b;
  }
  return inv_n * loss + 0.5 * ridge * w.squaredNorm();
}

SoftmaxModel FitSoftmax(const RowMatrix& x, std::span<const int> labels,
                        const SoftmaxConfig& cfg) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw DimensionMismatch("softmax: row and label counts differ");
  }
  if (labels.empty()) throw InvalidArgument("softmax: no labeled samples");
  if (!(cfg.ridge >= 0.0)) throw InvalidArgument("softmax: ridge must be >= 0");
  SoftmaxModel model;
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()),
                      model.classes.end());
  if (model.classes.size() < 2) {
    throw InvalidArgument("softmax: at least two classes must be labeled");
  }
  std::vector<int> index(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    index[i] = static_cast<int>(
        std::lower_bound(model.classes.begin(), model.classes.end(), labels[i]) -
        model.classes.begin());
  }
  const std::size_t c = model.classes.size();
  const Eigen::Index d = x.cols();
  LbfgsOptions options;
  options.grad_tol = cfg.tol;
  options.max_iters = cfg.max_iters;
  const LbfgsMinimizer result = Minimize(
      [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        return SoftmaxObjective(p, x, index, c, cfg.ridge, &g);
      },
      Eigen::VectorXd::Zero((d + 1) * static_cast<Eigen::Index>(c)), options);
  if (result.status() == LbfgsStatus::kNonFinite) {
    throw TrainingDiverged("softmax: objective is not finite");
  }
  Eigen::Map<const Eigen::MatrixXd> theta(result.x().data(), d + 1,
                                          static_cast<Eigen::Index>(c));
  model.weights = theta.topRows(d);
  model.bias = theta.row(d).transpose();
  model.final_grad_norm = result.grad_norm();
  model.converged = result.status() == LbfgsStatus::kConverged ||
                    model.final_grad_norm <= cfg.tol;
  model.iterations = result.iterations();
  return model;
}

int SoftmaxModel::Predict(std::span<const double> features) const {
  if (static_cast<Eigen::Index>(features.size()) != weights.rows()) {
    throw DimensionMismatch(fmt::format("probe: {} features, expected {}",
                                        features.size(), weights.rows()));
  }
  Eigen::Map<const Eigen::VectorXd> f(features.data(),
                                      static_cast<Eigen::Index>(features.size()));
  const Eigen::VectorXd scores = weights.transpose() * f + bias;
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[best]) best = j;
  }
  return classes[static_cast<std::size_t>(best)];
}

std::vector<int> SoftmaxModel::PredictAll(const RowMatrix& features) const {
  std::vector<int> out(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = Predict(
        {features.data() + i * features.cols(), static_cast<std::size_t>(features.cols())});
  }
  return out;
}

}  // namespace fairlatent
