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


#ifndef FAIRLATENT_HARNESS_CONFIG_HPP_
#define FAIRLATENT_HARNESS_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairlatent/augment.hpp"
#include "fairlatent/direction_combiner.hpp"
#include "fairlatent/fair_repr.hpp"
#include "fairlatent/latent_world.hpp"
#include "fairlatent/logreg.hpp"
#include "fairlatent/serialization.hpp"

namespace fairlatent::harness {

enum class CombineMode { kAnalytic, kGrid };

struct AugmentSection {
  // Derive [alpha_l, alpha_u] from the combined direction on training data.
  bool calibrate = true;
  double coverage = 0.5;
  // Used when calibrate is false.
  double alpha_l = 1.0;
  double alpha_u = 2.0;
  bool integer_degrees = false;
  // Noise std; when unset it is noise_scale * sigma_y.
  std::optional<double> noise_std;
  double noise_scale = 0.05;
  // Degree of the single_point arm: "alpha_u" (a full spurious flip) or
  // "alpha_l".
  std::string single_point = "alpha_u";
};

struct LambdaSweepCell {
  double ratio = 2.0;
  double sigma_y = 0.1;
  double sigma_s = 0.1;

  std::string Label() const;
};

struct LambdaSweepSection {
  std::size_t d = 100;
  std::size_t n = 20000;
  std::vector<double> lambdas = {1.0, 10.0, 100.0, 1000.0, 10000.0};
  std::vector<LambdaSweepCell> cells = DefaultCells();

  // Ratios 2:1 through 14:1, each with sigma_y, sigma_s in {0.1, 1.0}.
  static std::vector<LambdaSweepCell> DefaultCells();
};

struct ExperimentConfig {
  WorldSpec world;
  // DiGA directions: lambda1 < lambda2, same convention and options.
  RegressionConfig regression;
  double lambda1 = 1e-4;
  double lambda2 = 1e4;
  CombineMode combine_mode = CombineMode::kAnalytic;
  GridSearchConfig grid;
  AugmentSection augment;
  // Hidden and output sizes; the input size is the latent dimension.
  std::vector<std::size_t> encoder_dims = {64, 32};
  Activation activation = Activation::kRelu;
  // Predictor hidden and output sizes; empty means an identity predictor.
  std::vector<std::size_t> predictor_dims;
  InitScheme init = InitScheme::kUniform;
  bool encoder_bias = true;
  TrainConfig train;
  ProbeConfig probe;
  ProbeConfig erm_probe{1e-3, false};
  std::size_t eval_per_group = 1000;
  std::size_t repetitions = 5;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  LambdaSweepSection lambda_sweep;
  std::vector<double> betas = {0.5, 0.75, 0.9, 0.95};
  std::vector<double> label_ratios = {1.0, 0.5, 0.25, 0.1};
  std::vector<std::pair<double, double>> lambda_pairs = {{1e-4, 1e4}, {1e-6, 1e6}, {2e-5, 5e4}};

  RegressionConfig Regression(double lambda) const;
  EncoderSpec Encoder() const;
  // Throws ConfigError.
  void Validate() const;
};

// Strict parse: unknown keys, wrong types and invalid values throw
// ConfigError. Missing keys keep their defaults.
ExperimentConfig ParseConfig(const Json& j);
ExperimentConfig LoadConfig(const std::filesystem::path& path);

// Every field, including defaults, in a fixed order.
Json CanonicalJson(const ExperimentConfig& cfg);
// FNV-1a 64 of the compact canonical JSON.
std::uint64_t ConfigHash(const ExperimentConfig& cfg);
std::string HashHex(std::uint64_t hash);

}  // namespace fairlatent::harness

#endif  // FAIRLATENT_HARNESS_CONFIG_HPP_
