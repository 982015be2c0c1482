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


#ifndef FAIRLATENT_FAIR_REPR_HPP_
#define FAIRLATENT_FAIR_REPR_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fairlatent/augment.hpp"
#include "fairlatent/latent_world.hpp"
#include "fairlatent/logreg.hpp"
#include "fairlatent/rng.hpp"

namespace fairlatent {

enum class Activation { kIdentity, kRelu, kTanh };
const char* ToString(Activation activation);
Activation ParseActivation(const std::string& text);

enum class InitScheme {
  // Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  kUniform,
  // Rectangular identity weights, zero biases.
  kIdentity,
};
const char* ToString(InitScheme scheme);
InitScheme ParseInitScheme(const std::string& text);

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Fully connected network with the activation between layers and a linear
// output. An MLP without layers is the identity map.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<Layer> layers, Activation activation);

  // `dims` lists the input size followed by each layer's output size.
  // Layer l draws from stream (seed, encoder_init, repetition, substream + l).
  static Mlp Create(const std::vector<std::size_t>& dims, Activation activation,
                    InitScheme init, bool bias, std::uint64_t seed,
                    std::uint32_t repetition, std::uint32_t substream);

  bool empty() const { return layers_.empty(); }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  Activation activation() const { return activation_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  std::size_t num_parameters() const;

  Eigen::VectorXd Forward(const Eigen::VectorXd& x) const;
  // Rows of x are inputs.
  Eigen::MatrixXd ForwardBatch(const Eigen::MatrixXd& x) const;

  // Forward pass that keeps what Backward needs.
  struct Tape {
    std::vector<Eigen::MatrixXd> inputs;  // input of each layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
  };
  Eigen::MatrixXd ForwardBatch(const Eigen::MatrixXd& x, Tape& tape) const;
  // Accumulates parameter gradients into `grads` (same shapes as layers())
  // and returns the gradient with respect to the input.
  Eigen::MatrixXd Backward(const Tape& tape, const Eigen::MatrixXd& grad_out,
                           std::vector<Layer>& grads) const;

  std::vector<Layer> ZeroGradients() const;

 private:
  std::vector<Layer> layers_;
  Activation activation_ = Activation::kRelu;
};

struct EncoderSpec {
  // Input size followed by layer output sizes; at least one layer.
  std::vector<std::size_t> layer_dims;
  Activation activation = Activation::kRelu;
  // Online-branch predictor head, input size first. Empty means identity.
  std::vector<std::size_t> predictor_dims;
  InitScheme init = InitScheme::kUniform;
  bool bias = true;

  static EncoderSpec Default(std::size_t input_dim);
  void Validate() const;
};

struct EncoderState {
  Mlp online;
  Mlp predictor;
  Mlp target;
  double momentum = 0.99;
  std::size_t step = 0;
  // Loss of the first batch before any update.
  double initial_loss = 0.0;
  // Mean batch loss of each epoch.
  std::vector<double> loss_history;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  double learning_rate = 1e-2;
  double momentum = 0.99;
  std::uint64_t seed = 0;
  std::uint32_t repetition = 0;

  void Validate() const;
};

EncoderState InitEncoder(const EncoderSpec& spec, const TrainConfig& cfg);

// Builds a state whose online and target networks share fixed weights, with
// an identity predictor.
EncoderState EncoderFromLayers(std::vector<Layer> layers, Activation activation);

struct ContrastiveGradients {
  std::vector<Layer> online;
  std::vector<Layer> predictor;
};

// Symmetric negative-cosine loss
//   2 - mean cos(p(f(v1)), g(v2)) - mean cos(p(f(v2)), g(v1))
// with f online, p predictor and g target. The target branch is treated as a
// constant. Gradients are written to `grads` when non-null.
double ContrastiveLoss(const EncoderState& state, const Eigen::MatrixXd& view1,
                       const Eigen::MatrixXd& view2, ContrastiveGradients* grads);

// target <- m target + (1 - m) online.
void MomentumUpdate(EncoderState& state);

// One SGD step on the online network and predictor followed by the momentum
// update. Returns the loss before the step. Throws TrainingDiverged on a
// non-finite loss.
double TrainStep(EncoderState& state, const Eigen::MatrixXd& view1,
                 const Eigen::MatrixXd& view2, double learning_rate);

// Full training loop. Each epoch visits samples in a seeded permutation and
// draws both views of sample i from ViewStream(aug, i, epoch).
EncoderState TrainEncoder(const RowMatrix& z, const Eigen::VectorXd& n_cmb,
                          const AugmentConfig& aug, const EncoderSpec& spec,
                          const TrainConfig& cfg);
EncoderState TrainEncoder(const Dataset& data, const Eigen::VectorXd& n_cmb,
                          const AugmentConfig& aug, const EncoderSpec& spec,
                          const TrainConfig& cfg);

// Online-network forward pass.
Eigen::VectorXd Encode(const EncoderState& state, const Eigen::VectorXd& z);
RowMatrix EncodeAll(const EncoderState& state, const RowMatrix& z);

struct ProbeConfig {
  double ridge = 1e-3;
  // Scale each representation to unit length before the linear map.
  bool normalize_features = true;
  double tol = 1e-8;
  std::size_t max_iters = 10000;
};

class LinearProbe {
 public:
  LinearProbe() = default;
  LinearProbe(SoftmaxModel model, bool normalize_features);

  int Predict(std::span<const double> features) const;
  std::vector<int> PredictAll(const RowMatrix& features) const;
  const SoftmaxModel& model() const { return model_; }
  bool normalize_features() const { return normalize_; }
  const std::vector<int>& classes() const { return model_.classes; }

 private:
  SoftmaxModel model_;
  bool normalize_ = false;
};

// Rows scaled to unit norm; zero rows are left as they are.
RowMatrix NormalizeRows(const RowMatrix& x);

// Trains on rows whose mask entry is true (all rows when mask is empty).
LinearProbe TrainProbe(const RowMatrix& features, std::span<const int> labels,
                       const std::vector<bool>& mask, const ProbeConfig& cfg);
// Features are the state's representations, or raw latents when state is null.
LinearProbe TrainProbe(const EncoderState* state, const Dataset& data,
                       std::span<const int> labels, const std::vector<bool>& mask,
                       const ProbeConfig& cfg);
// Probe for spurious block `block` on the full dataset; its accuracy measures
// how much of s the features still carry.
LinearProbe SpuriousProbe(const EncoderState* state, const Dataset& data,
                          std::size_t block, const ProbeConfig& cfg);

// Keeps round(ratio * n) samples chosen by a seeded shuffle.
std::vector<bool> MakeLabelMask(std::size_t n, double ratio, std::uint64_t seed,
                                std::uint32_t repetition);

// Fraction of rows of `features` on which the probe predicts `labels`.
double ProbeAccuracy(const LinearProbe& probe, const RowMatrix& features,
                     std::span<const int> labels);

// Sum over coordinates of the per-coordinate variance of the rows.
double RepresentationVariance(const RowMatrix& features);

}  // namespace fairlatent

#endif  // FAIRLATENT_FAIR_REPR_HPP_
