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


#ifndef FAIRLATENT_HARNESS_EXPERIMENTS_HPP_
#define FAIRLATENT_HARNESS_EXPERIMENTS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairlatent/csv.hpp"
#include "fairlatent/harness/config.hpp"
#include "fairlatent/metrics.hpp"

namespace fairlatent::harness {

// Runs body(0..count-1) on up to `jobs` threads. Each index is an
// independent task writing only its own outputs, so results never depend on
// scheduling. The exception of the lowest failing index is rethrown.
void ParallelFor(std::size_t count, std::size_t jobs,
                 const std::function<void(std::size_t)>& body);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Everything a run emits besides timings.
struct RunArtifacts {
  std::vector<std::pair<std::string, CsvTable>> tables;
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  // Failed cells or arms; a nonempty list means exit code 2.
  std::vector<std::string> errors;
  Json values = Json::object();
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};
// Sample standard deviation (n - 1 denominator); zero for a single value.
MeanStd Summarize(std::span<const double> values);

// ---- lambda sweep -----------------------------------------------------------

// Published beta_clf means for the synthetic table, when the cell is listed.
std::optional<double> ReferenceBetaClf(double ratio, double sigma_y, double sigma_s,
                                       double lambda);

struct LambdaSweepResult {
  std::vector<LambdaSweepCell> cells;
  std::vector<double> lambdas;
  std::size_t reps = 0;
  LossConvention convention = LossConvention::kSumLoss;
  // [cell][lambda][rep]; nullopt where the fit failed.
  std::vector<std::vector<std::vector<std::optional<double>>>> beta;
  std::vector<std::vector<std::vector<char>>> converged;
  std::vector<std::string> errors;

  MeanStd Cell(std::size_t cell, std::size_t lambda) const;
  RunArtifacts Artifacts() const;
};

LambdaSweepResult RunLambdaSweep(const ExperimentConfig& cfg, std::size_t jobs);

// ---- pipeline ---------------------------------------------------------------

enum class Method { kErm, kPlainContrastive, kSinglePoint, kDiga };
const char* ToString(Method method);
Method ParseMethod(const std::string& text);
std::vector<Method> AllMethods();

struct ArmResult {
  Method method = Method::kErm;
  bool ok = false;
  std::string error;
  FairnessReport report;
  double spurious_acc = 0.0;
};

struct DirectionInfo {
  bool ok = false;
  std::string error;
  double beta_clf1 = 0.0;
  double beta_clf2 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  // Ratio implied by the closed form; equals the chosen ratio in analytic mode.
  double implied_ratio = 0.0;
  double chosen_ratio = 0.0;
  double residual = 0.0;
  double alpha_l = 0.0;
  double alpha_u = 0.0;
  std::vector<GridPoint> trace;
  std::vector<std::string> warnings;
};

struct RepData {
  Dataset train;
  Dataset eval;
};

RepData MakeRepData(const ExperimentConfig& cfg, std::uint32_t rep);

struct DirectionStage {
  DirectionInfo info;
  CombinedDirection combined;
  AlphaRange alpha;
};

// Fits the two directions, combines them and calibrates the editing range.
// Failures are recorded in info.ok / info.error.
DirectionStage LearnDirection(const ExperimentConfig& cfg, const Dataset& train,
                              std::uint32_t rep);

// Encoder for a contrastive arm; ERM has none. Requires a successful
// direction stage for single_point and diga.
EncoderState TrainArm(const ExperimentConfig& cfg, Method method, const Dataset& train,
                      const DirectionStage& direction, std::uint32_t rep);

// Probes on representations (raw latents for ERM) of the training set and
// scores the balanced evaluation set. An empty mask labels every sample.
ArmResult EvaluateArm(const ExperimentConfig& cfg, Method method,
                      const EncoderState* state, const RepData& data,
                      const std::vector<bool>& mask);

struct PipelineRep {
  DirectionInfo direction;
  std::vector<ArmResult> arms;
};

PipelineRep RunPipelineRep(const ExperimentConfig& cfg, std::uint32_t rep,
                           std::span<const Method> methods);

struct ArmSummary {
  MeanStd acc, wst, eo, spurious_acc;
};

struct PipelineResult {
  std::vector<Method> methods;
  std::vector<PipelineRep> reps;

  ArmSummary Summary(Method method) const;
  RunArtifacts Artifacts(const std::string& prefix = "pipeline") const;
};

PipelineResult RunPipeline(const ExperimentConfig& cfg, std::span<const Method> methods,
                           std::size_t jobs);

// ---- sweeps -----------------------------------------------------------------

struct BiasSweepResult {
  std::vector<double> betas;
  std::vector<PipelineResult> runs;  // erm and diga per beta

  RunArtifacts Artifacts() const;
};

BiasSweepResult RunBiasSweep(const ExperimentConfig& cfg, std::size_t jobs);

struct LabelSweepRow {
  double ratio = 1.0;
  Method method = Method::kErm;
  std::uint32_t rep = 0;
  ArmResult arm;
};

struct LabelSweepResult {
  std::vector<double> ratios;
  std::size_t reps = 0;
  std::vector<LabelSweepRow> rows;
  std::vector<DirectionInfo> directions;

  ArmSummary Summary(double ratio, Method method) const;
  RunArtifacts Artifacts() const;
};

LabelSweepResult RunLabelSweep(const ExperimentConfig& cfg, std::size_t jobs);

struct LambdaPairRow {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::uint32_t rep = 0;
  DirectionInfo direction;
  ArmResult arm;
};

struct LambdaPairResult {
  std::vector<std::pair<double, double>> pairs;
  std::size_t reps = 0;
  std::vector<LambdaPairRow> rows;

  ArmSummary Summary(std::size_t pair) const;
  RunArtifacts Artifacts() const;
};

LambdaPairResult RunLambdaPairAblation(const ExperimentConfig& cfg, std::size_t jobs);

// Writes train_rep<r>.csv and eval_rep<r>.csv straight into out_dir; the
// datasets are too large to buffer as tables.
RunArtifacts GenerateData(const ExperimentConfig& cfg, std::size_t jobs,
                          const std::filesystem::path& out_dir);

}  // namespace fairlatent::harness

#endif  // FAIRLATENT_HARNESS_EXPERIMENTS_HPP_
