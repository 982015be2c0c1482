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

#ifndef FAIRLATENT_LATENT_WORLD_HPP_
#define FAIRLATENT_LATENT_WORLD_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fairlatent/rng.hpp"

namespace fairlatent {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SpuriousBlock {
  std::size_t dim = 1;
  double sigma = 0.1;
  // Probability that this block's label agrees with y, in [0.5, 1).
  double bias = 0.5;
};

// Parameters of the synthetic biased latent world. Each group draws
// z_block | label ~ Normal(label * 1, sigma^2 I) independently per block.
struct WorldSpec {
  std::size_t d = 100;
  std::size_t n = 20000;
  double sigma_y = 0.1;
  std::vector<SpuriousBlock> spurious_blocks{{100, 0.1, 2.0 / 3.0}};
  std::uint64_t seed = 0;

  // Convenience for the common single-block world.
  static WorldSpec SingleBlock(std::size_t d, std::size_t n, double bias,
                               double sigma_y, double sigma_s,
                               std::uint64_t seed);

  // Bias degree beta of a majority:minority ratio r:1, i.e. r / (r + 1).
  static double BiasFromRatio(double majority_to_minority);

  std::size_t latent_dim() const;
  std::size_t num_spurious() const { return spurious_blocks.size(); }
  // 2 * 2^K groups for K spurious blocks.
  std::size_t num_groups() const;

  // Throws InvalidArgument when an invariant is violated.
  void Validate() const;
};

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

// Ground-truth coordinate layout: the stable block first, then each spurious
// block in order.
struct SubspaceMap {
  IndexRange stable;
  std::vector<IndexRange> spurious;
  std::size_t dim = 0;

  static SubspaceMap For(const WorldSpec& spec);
};

// Labels of a group. Groups are enumerated as index = 2 * mask + (y == -1),
// where bit k of mask is set when block k disagrees with y. With one block
// this yields (+1,+1), (-1,-1), (+1,-1), (-1,+1): majority groups first.
struct GroupLabels {
  int y = 1;
  std::vector<int> s;
};
GroupLabels LabelsOfGroup(std::size_t group, std::size_t num_spurious);
std::size_t GroupOf(int y, std::span<const int> s);

struct LatentSample {
  Eigen::VectorXd z;
  int y = 1;
  std::vector<int> s;
  std::size_t group = 0;
};

// Immutable sample table. Rows of z() are latent codes, stored contiguously.
class Dataset {
 public:
  Dataset(WorldSpec spec, RowMatrix z, std::vector<int> y,
          std::vector<int> s_flat);

  std::size_t size() const { return y_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(z_.cols()); }
  std::size_t num_spurious() const { return num_spurious_; }

  const RowMatrix& z() const { return z_; }
  std::span<const double> row(std::size_t i) const;
  std::span<const int> y() const { return y_; }
  int y(std::size_t i) const { return y_[i]; }
  std::span<const int> s(std::size_t i) const;
  // All spurious labels, num_spurious() per sample.
  std::span<const int> s_flat() const { return s_; }
  // Labels of spurious block k for every sample.
  std::vector<int> spurious_labels(std::size_t k) const;
  std::size_t group(std::size_t i) const { return group_[i]; }
  std::vector<std::size_t> group_counts() const;

  LatentSample sample(std::size_t i) const;
  const WorldSpec& spec() const { return spec_; }
  const SubspaceMap& subspace_map() const { return map_; }

 private:
  WorldSpec spec_;
  SubspaceMap map_;
  RowMatrix z_;
  std::vector<int> y_;
  std::vector<int> s_;
  std::vector<std::size_t> group_;
  std::size_t num_spurious_;
};

// Expected group sizes by largest-remainder apportionment of n over the
// group probabilities. Remainder ties go to the lower group index.
std::vector<std::size_t> GroupSizes(const WorldSpec& spec);

// Draws a training dataset for one repetition. Sample j of group g uses the
// stream (seed, domain, repetition, g) at element j.
Dataset SampleDataset(const WorldSpec& spec, std::uint32_t repetition = 0,
                      StreamDomain domain = StreamDomain::kTrainData);

// Datasets for worlds that differ only in their noise scales. Result k is
// bitwise equal to SampleDataset(specs[k], repetition, domain), but the
// standard-normal draws are generated once and shared.
std::vector<Dataset> SampleWithSharedNoise(std::span<const WorldSpec> specs,
                                           std::uint32_t repetition = 0,
                                           StreamDomain domain = StreamDomain::kTrainData);

// Unbiased evaluation set with `per_group` samples in each (y, s) group,
// drawn from the evaluation seed domain.
Dataset SampleBalanced(const WorldSpec& spec, std::size_t per_group,
                       std::uint32_t repetition = 0);

// Bayes classifiers standing in for an external reference model.
class OracleModel {
 public:
  enum class Kind { kBayesTarget, kBayesSpurious };

  static OracleModel BayesTarget(const SubspaceMap& map);
  static OracleModel BayesSpurious(const SubspaceMap& map, std::size_t block);

  Kind kind() const { return kind_; }
  std::size_t block() const { return block_; }
  // sign(1^T z_block); an exact zero maps to +1.
  int Predict(std::span<const double> z) const;

 private:
  OracleModel(Kind kind, std::size_t block, SubspaceMap map);

  Kind kind_;
  std::size_t block_;
  SubspaceMap map_;
};

// CSV with columns z_0..z_{D-1}, y, s_0..s_{K-1}.
void WriteDatasetCsv(const Dataset& data, std::ostream& out);

}  // namespace fairlatent

#endif  // FAIRLATENT_LATENT_WORLD_HPP_
