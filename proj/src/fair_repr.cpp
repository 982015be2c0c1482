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


#include "fairlatent/fair_repr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <fmt/format.h>

#include "fairlatent/error.hpp"

namespace fairlatent {
namespace {

constexpr double kNormFloor = 1e-8;

void Activate(Activation activation, Eigen::MatrixXd& x) {
  switch (activation) {
    case Activation::kIdentity:
      break;
    case Activation::kRelu:
      x = x.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      x = x.array().tanh().matrix();
      break;
  }
}

// Multiplies grad by the activation derivative evaluated at `pre`.
void ActivationBackward(Activation activation, const Eigen::MatrixXd& pre,
                        Eigen::MatrixXd& grad) {
  switch (activation) {
    case Activation::kIdentity:
      break;
    case Activation::kRelu:
      grad = (pre.array() > 0.0).select(grad.array(), 0.0).matrix();
      break;
    case Activation::kTanh:
      grad = (grad.array() * (1.0 - pre.array().tanh().square())).matrix();
      break;
  }
}

// Sum over rows of cos(a_i, b_i); writes d/da into grad_a when non-null.
double CosineSum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                 Eigen::MatrixXd* grad_a) {
  double total = 0.0;
  if (grad_a != nullptr) grad_a->resize(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double na = std::max(a.row(i).norm(), kNormFloor);
    const double nb = std::max(b.row(i).norm(), kNormFloor);
    const double c = a.row(i).dot(b.row(i)) / (na * nb);
    total += c;
    if (grad_a != nullptr) {
      grad_a->row(i) = b.row(i) / (na * nb) - (c / (na * na)) * a.row(i);
    }
  }
  return total;
}

void AddScaled(std::vector<Layer>& params, const std::vector<Layer>& grads,
               double scale) {
  for (std::size_t l = 0; l < params.size(); ++l) {
    params[l].weight += scale * grads[l].weight;
    params[l].bias += scale * grads[l].bias;
  }
}

std::vector<std::size_t> EpochOrder(std::size_t n, const TrainConfig& cfg,
                                    std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(StreamId{cfg.seed, StreamDomain::kBatchOrder, cfg.repetition,
                          static_cast<std::uint32_t>(epoch)},
                 0);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.Below(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace

const char* ToString(Activation activation) {
  switch (activation) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
  }
  return "unknown";
}

Activation ParseActivation(const std::string& text) {
  if (text == "identity") return Activation::kIdentity;
  if (text == "relu") return Activation::kRelu;
  if (text == "tanh") return Activation::kTanh;
  throw InvalidArgument(fmt::format("unknown activation '{}'", text));
}

const char* ToString(InitScheme scheme) {
  return scheme == InitScheme::kUniform ? "uniform" : "identity";
}

InitScheme ParseInitScheme(const std::string& text) {
  if (text == "uniform") return InitScheme::kUniform;
  if (text == "identity") return InitScheme::kIdentity;
  throw InvalidArgument(fmt::format("unknown init scheme '{}'", text));
}

Mlp::Mlp(std::vector<Layer> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].bias.size() != layers_[l].weight.rows()) {
      throw DimensionMismatch(fmt::format("mlp: layer {} bias size mismatch", l));
    }
    if (l > 0 && layers_[l].weight.cols() != layers_[l - 1].weight.rows()) {
      throw DimensionMismatch(fmt::format("mlp: layer {} input size mismatch", l));
    }
  }
}

Mlp Mlp::Create(const std::vector<std::size_t>& dims, Activation activation,
                InitScheme init, bool bias, std::uint64_t seed,
                std::uint32_t repetition, std::uint32_t substream) {
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(dims[l]);
    const auto out = static_cast<Eigen::Index>(dims[l + 1]);
    Layer layer;
    layer.bias = Eigen::VectorXd::Zero(out);
    if (init == InitScheme::kIdentity) {
      layer.weight = Eigen::MatrixXd::Identity(out, in);
    } else {
      layer.weight.resize(out, in);
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      CounterRng rng(StreamId{seed, StreamDomain::kEncoderInit, repetition,
                              substream + static_cast<std::uint32_t>(l)},
                     0);
      for (Eigen::Index o = 0; o < out; ++o) {
        for (Eigen::Index i = 0; i < in; ++i) layer.weight(o, i) = rng.Uniform(-bound, bound);
      }
      if (bias) {
        for (Eigen::Index o = 0; o < out; ++o) layer.bias[o] = rng.Uniform(-bound, bound);
      }
    }
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers), activation);
}

std::size_t Mlp::input_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols());
}

std::size_t Mlp::output_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.rows());
}

std::size_t Mlp::num_parameters() const {
  std::size_t total = 0;
  for (const Layer& layer : layers_) {
    total += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return total;
}

Eigen::VectorXd Mlp::Forward(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd row = x.transpose();
  return ForwardBatch(row).row(0).transpose();
}

Eigen::MatrixXd Mlp::ForwardBatch(const Eigen::MatrixXd& x) const {
  if (!layers_.empty() && x.cols() != layers_.front().weight.cols()) {
    throw DimensionMismatch(fmt::format("mlp: input has {} features, expected {}",
                                        x.cols(), layers_.front().weight.cols()));
  }
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd next = h * layers_[l].weight.transpose();
    next.rowwise() += layers_[l].bias.transpose();
    if (l + 1 < layers_.size()) Activate(activation_, next);
    h = std::move(next);
  }
  return h;
}

Eigen::MatrixXd Mlp::ForwardBatch(const Eigen::MatrixXd& x, Tape& tape) const {
  if (!layers_.empty() && x.cols() != layers_.front().weight.cols()) {
    throw DimensionMismatch("mlp: input dimension mismatch");
  }
  tape.inputs.clear();
  tape.pre.clear();
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    tape.inputs.push_back(h);
    Eigen::MatrixXd pre = h * layers_[l].weight.transpose();
    pre.rowwise() += layers_[l].bias.transpose();
    tape.pre.push_back(pre);
    if (l + 1 < layers_.size()) Activate(activation_, pre);
    h = std::move(pre);
  }
  return h;
}

Eigen::MatrixXd Mlp::Backward(const Tape& tape, const Eigen::MatrixXd& grad_out,
                              std::vector<Layer>& grads) const {
  Eigen::MatrixXd g = grad_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    if (l + 1 < layers_.size()) ActivationBackward(activation_, tape.pre[l], g);
    grads[l].weight.noalias() += g.transpose() * tape.inputs[l];
    grads[l].bias += g.colwise().sum().transpose();
    g = g * layers_[l].weight;
  }
  return g;
}

std::vector<Layer> Mlp::ZeroGradients() const {
  std::vector<Layer> grads;
  for (const Layer& layer : layers_) {
    grads.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                     Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return grads;
}

EncoderSpec EncoderSpec::Default(std::size_t input_dim) {
  EncoderSpec spec;
  spec.layer_dims = {input_dim, 64, 32};
  return spec;
}

void EncoderSpec::Validate() const {
  if (layer_dims.size() < 2) throw InvalidArgument("encoder: need at least one layer");
  for (std::size_t dim : layer_dims) {
    if (dim == 0) throw InvalidArgument("encoder: layer sizes must be positive");
  }
  if (layer_dims.back() < 2) throw InvalidArgument("encoder: output dim must be >= 2");
  if (!predictor_dims.empty()) {
    if (predictor_dims.size() < 2) {
      throw InvalidArgument("encoder: predictor needs an input and an output size");
    }
    if (predictor_dims.front() != layer_dims.back() ||
        predictor_dims.back() != layer_dims.back()) {
      throw InvalidArgument(
          "encoder: predictor must map the representation space onto itself");
    }
  }
}

void TrainConfig::Validate() const {
  if (epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
  if (batch_size < 2) throw InvalidArgument("train: batch_size must be >= 2");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("train: learning_rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw InvalidArgument("train: momentum must lie in [0, 1]");
  }
}

EncoderState InitEncoder(const EncoderSpec& spec, const TrainConfig& cfg) {
  spec.Validate();
  EncoderState state;
  state.online = Mlp::Create(spec.layer_dims, spec.activation, spec.init, spec.bias,
                             cfg.seed, cfg.repetition, 0);
  if (!spec.predictor_dims.empty()) {
    state.predictor = Mlp::Create(spec.predictor_dims, spec.activation, spec.init,
                                  spec.bias, cfg.seed, cfg.repetition, 1u << 16);
  }
  state.target = state.online;
  state.momentum = cfg.momentum;
  return state;
}

EncoderState EncoderFromLayers(std::vector<Layer> layers, Activation activation) {
  EncoderState state;
  state.online = Mlp(std::move(layers), activation);
  state.target = state.online;
  return state;
}

double ContrastiveLoss(const EncoderState& state, const Eigen::MatrixXd& view1,
                       const Eigen::MatrixXd& view2, ContrastiveGradients* grads) {
  if (view1.rows() != view2.rows() || view1.cols() != view2.cols() || view1.rows() == 0) {
    throw DimensionMismatch("contrastive loss: views must be equal, nonempty batches");
  }
  const double inv_b = 1.0 / static_cast<double>(view1.rows());
  const Eigen::MatrixXd t1 = state.target.ForwardBatch(view1);
  const Eigen::MatrixXd t2 = state.target.ForwardBatch(view2);
  Mlp::Tape enc1, enc2, pred1, pred2;
  const Eigen::MatrixXd h1 = state.online.ForwardBatch(view1, enc1);
  const Eigen::MatrixXd h2 = state.online.ForwardBatch(view2, enc2);
  const Eigen::MatrixXd p1 = state.predictor.ForwardBatch(h1, pred1);
  const Eigen::MatrixXd p2 = state.predictor.ForwardBatch(h2, pred2);
  Eigen::MatrixXd g1, g2;
  const double cos12 = CosineSum(p1, t2, grads ? &g1 : nullptr);
  const double cos21 = CosineSum(p2, t1, grads ? &g2 : nullptr);
  const double loss = 2.0 - inv_b * cos12 - inv_b * cos21;
  if (grads != nullptr) {
    grads->online = state.online.ZeroGradients();
    grads->predictor = state.predictor.ZeroGradients();
    g1 *= -inv_b;
    g2 *= -inv_b;
    const Eigen::MatrixXd dh1 = state.predictor.Backward(pred1, g1, grads->predictor);
    const Eigen::MatrixXd dh2 = state.predictor.Backward(pred2, g2, grads->predictor);
    state.online.Backward(enc1, dh1, grads->online);
    state.online.Backward(enc2, dh2, grads->online);
  }
  return loss;
}

void MomentumUpdate(EncoderState& state) {
  const double m = state.momentum;
  auto& target = state.target.mutable_layers();
  const auto& online = state.online.layers();
  for (std::size_t l = 0; l < target.size(); ++l) {
    target[l].weight = m * target[l].weight + (1.0 - m) * online[l].weight;
    target[l].bias = m * target[l].bias + (1.0 - m) * online[l].bias;
  }
}

double TrainStep(EncoderState& state, const Eigen::MatrixXd& view1,
                 const Eigen::MatrixXd& view2, double learning_rate) {
  ContrastiveGradients grads;
  const double loss = ContrastiveLoss(state, view1, view2, &grads);
  if (!std::isfinite(loss)) {
    throw TrainingDiverged(fmt::format(
        "encoder loss is not finite at step {} (learning rate {} too high?)",
        state.step, learning_rate));
  }
  AddScaled(state.online.mutable_layers(), grads.online, -learning_rate);
  AddScaled(state.predictor.mutable_layers(), grads.predictor, -learning_rate);
  MomentumUpdate(state);
  ++state.step;
  return loss;
}

EncoderState TrainEncoder(const RowMatrix& z, const Eigen::VectorXd& n_cmb,
                          const AugmentConfig& aug, const EncoderSpec& spec,
                          const TrainConfig& cfg) {
  cfg.Validate();
  aug.Validate();
  spec.Validate();
  if (z.rows() == 0) throw InvalidArgument("train_encoder: empty dataset");
  if (spec.layer_dims.front() != static_cast<std::size_t>(z.cols())) {
    throw DimensionMismatch(fmt::format("train_encoder: encoder input {} vs latent {}",
                                        spec.layer_dims.front(), z.cols()));
  }
  if (n_cmb.size() != z.cols()) {
    throw DimensionMismatch("train_encoder: direction and latent dimensions differ");
  }
  if (std::abs(n_cmb.norm() - 1.0) > 1e-9) {
    throw InvalidArgument("train_encoder: direction must have unit norm");
  }
  EncoderState state = InitEncoder(spec, cfg);
  const std::size_t n = static_cast<std::size_t>(z.rows());
  const std::size_t dim = static_cast<std::size_t>(z.cols());
  std::vector<double> buf1(dim), buf2(dim);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> order = EpochOrder(n, cfg, epoch);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t rows = std::min(cfg.batch_size, n - start);
      Eigen::MatrixXd v1(static_cast<Eigen::Index>(rows), z.cols());
      Eigen::MatrixXd v2(static_cast<Eigen::Index>(rows), z.cols());
      for (std::size_t j = 0; j < rows; ++j) {
        const std::size_t idx = order[start + j];
        CounterRng rng = ViewStream(aug, idx, epoch);
        SampleViewsInto({z.data() + idx * dim, dim}, n_cmb, aug, rng, buf1.data(),
                        buf2.data());
        for (std::size_t c = 0; c < dim; ++c) {
          v1(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = buf1[c];
          v2(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = buf2[c];
        }
      }
      const double loss = TrainStep(state, v1, v2, cfg.learning_rate);
      if (state.step == 1) state.initial_loss = loss;
      total += loss;
      ++batches;
    }
    state.loss_history.push_back(total / static_cast<double>(batches));
  }
  return state;
}

EncoderState TrainEncoder(const Dataset& data, const Eigen::VectorXd& n_cmb,
                          const AugmentConfig& aug, const EncoderSpec& spec,
                          const TrainConfig& cfg) {
  return TrainEncoder(data.z(), n_cmb, aug, spec, cfg);
}

Eigen::VectorXd Encode(const EncoderState& state, const Eigen::VectorXd& z) {
  return state.online.Forward(z);
}

RowMatrix EncodeAll(const EncoderState& state, const RowMatrix& z) {
  return state.online.ForwardBatch(z);
}

LinearProbe::LinearProbe(SoftmaxModel model, bool normalize_features)
    : model_(std::move(model)), normalize_(normalize_features) {}

RowMatrix NormalizeRows(const RowMatrix& x) {
  RowMatrix out = x;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

int LinearProbe::Predict(std::span<const double> features) const {
  if (!normalize_) return model_.Predict(features);
  Eigen::Map<const Eigen::VectorXd> f(features.data(),
                                      static_cast<Eigen::Index>(features.size()));
  const double norm = f.norm();
  const Eigen::VectorXd unit = norm > 0.0 ? Eigen::VectorXd(f / norm) : Eigen::VectorXd(f);
  return model_.Predict({unit.data(), features.size()});
}

std::vector<int> LinearProbe::PredictAll(const RowMatrix& features) const {
  return model_.PredictAll(normalize_ ? NormalizeRows(features) : features);
}

LinearProbe TrainProbe(const RowMatrix& features, std::span<const int> labels,
                       const std::vector<bool>& mask, const ProbeConfig& cfg) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw DimensionMismatch("train_probe: feature and label counts differ");
  }
  if (!mask.empty() && mask.size() != labels.size()) {
    throw DimensionMismatch("train_probe: mask length differs from label count");
  }
  const RowMatrix scaled = cfg.normalize_features ? NormalizeRows(features) : features;
  SoftmaxConfig softmax;
  softmax.ridge = cfg.ridge;
  softmax.tol = cfg.tol;
  softmax.max_iters = cfg.max_iters;
  if (mask.empty() || std::all_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    return LinearProbe(FitSoftmax(scaled, labels, softmax), cfg.normalize_features);
  }
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) rows.push_back(static_cast<Eigen::Index>(i));
  }
  if (rows.empty()) throw InvalidArgument("train_probe: every label is masked");
  RowMatrix subset(static_cast<Eigen::Index>(rows.size()), scaled.cols());
  std::vector<int> sub_labels(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    subset.row(static_cast<Eigen::Index>(j)) = scaled.row(rows[j]);
    sub_labels[j] = labels[static_cast<std::size_t>(rows[j])];
  }
  return LinearProbe(FitSoftmax(subset, sub_labels, softmax), cfg.normalize_features);
}

LinearProbe TrainProbe(const EncoderState* state, const Dataset& data,
                       std::span<const int> labels, const std::vector<bool>& mask,
                       const ProbeConfig& cfg) {
  const RowMatrix features = state ? EncodeAll(*state, data.z()) : data.z();
  return TrainProbe(features, labels, mask, cfg);
}

LinearProbe SpuriousProbe(const EncoderState* state, const Dataset& data,
                          std::size_t block, const ProbeConfig& cfg) {
  const std::vector<int> labels = data.spurious_labels(block);
  return TrainProbe(state, data, labels, {}, cfg);
}

std::vector<bool> MakeLabelMask(std::size_t n, double ratio, std::uint64_t seed,
                                std::uint32_t repetition) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw InvalidArgument(fmt::format("label ratio {} outside (0, 1]", ratio));
  }
  const auto keep = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  if (keep == 0) throw InvalidArgument("label ratio keeps no samples");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(StreamId{seed, StreamDomain::kLabelMask, repetition, 0}, 0);
  for (std::size_t i = 0; i < keep && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.Below(n - i));
    std::swap(order[i], order[j]);
  }
  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < keep; ++i) mask[order[i]] = true;
  return mask;
}

double ProbeAccuracy(const LinearProbe& probe, const RowMatrix& features,
                     std::span<const int> labels) {
  if (static_cast<std::size_t>(features.rows()) != labels.size() || labels.empty()) {
    throw DimensionMismatch("probe accuracy: feature and label counts differ");
  }
  const std::vector<int> pred = probe.PredictAll(features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += pred[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double RepresentationVariance(const RowMatrix& features) {
  if (features.rows() < 2) return 0.0;
  const Eigen::RowVectorXd mean = features.colwise().mean();
  return (features.rowwise() - mean).squaredNorm() /
         static_cast<double>(features.rows() - 1);
}

}  // namespace fairlatent
