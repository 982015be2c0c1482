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


#include "fairlatent/latent_world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <utility>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "fairlatent/csv.hpp"
#include "fairlatent/error.hpp"

namespace fairlatent {

WorldSpec WorldSpec::SingleBlock(std::size_t d, std::size_t n, double bias,
                                 double sigma_y, double sigma_s,
                                 std::uint64_t seed) {
  WorldSpec spec;
  spec.d = d;
  spec.n = n;
  spec.sigma_y = sigma_y;
  spec.spurious_blocks = {{d, sigma_s, bias}};
  spec.seed = seed;
  return spec;
}

double WorldSpec::BiasFromRatio(double majority_to_minority) {
  if (!(majority_to_minority >= 1.0) || !std::isfinite(majority_to_minority)) {
    throw InvalidArgument("majority:minority ratio must be finite and >= 1");
  }
  return majority_to_minority / (majority_to_minority + 1.0);
}

std::size_t WorldSpec::latent_dim() const {
  std::size_t dim = d;
  for (const auto& block : spurious_blocks) dim += block.dim;
  return dim;
}

std::size_t WorldSpec::num_groups() const {
  return std::size_t{2} << spurious_blocks.size();
}

void WorldSpec::Validate() const {
  if (d < 1) throw InvalidArgument("world: d must be >= 1");
  if (n < 4) throw InvalidArgument("world: n must be >= 4");
  if (!(sigma_y > 0.0) || !std::isfinite(sigma_y)) {
    throw InvalidArgument("world: sigma_y must be positive");
  }
  if (spurious_blocks.empty()) {
    throw InvalidArgument("world: at least one spurious block is required");
  }
  if (spurious_blocks.size() > 16) {
    throw InvalidArgument("world: at most 16 spurious blocks are supported");
  }
  for (std::size_t k = 0; k < spurious_blocks.size(); ++k) {
    const auto& block = spurious_blocks[k];
    if (block.dim < 1) {
      throw InvalidArgument(fmt::format("world: spurious block {} has dim 0", k));
    }
    if (!(block.sigma > 0.0) || !std::isfinite(block.sigma)) {
      throw InvalidArgument(
          fmt::format("world: spurious block {} sigma must be positive", k));
    }
    if (!(block.bias >= 0.5 && block.bias < 1.0)) {
      throw InvalidArgument(
          fmt::format("world: spurious block {} bias {} outside [0.5, 1)", k,
                      block.bias));
    }
  }
}

SubspaceMap SubspaceMap::For(const WorldSpec& spec) {
  SubspaceMap map;
  map.stable = {0, spec.d};
  std::size_t offset = spec.d;
  for (const auto& block : spec.spurious_blocks) {
    map.spurious.push_back({offset, offset + block.dim});
    offset += block.dim;
  }
  map.dim = offset;
  return map;
}

GroupLabels LabelsOfGroup(std::size_t group, std::size_t num_spurious) {
  GroupLabels labels;
  labels.y = (group & 1u) ? -1 : 1;
  const std::size_t mask = group >> 1;
  labels.s.resize(num_spurious);
  for (std::size_t k = 0; k < num_spurious; ++k) {
    labels.s[k] = ((mask >> k) & 1u) ? -labels.y : labels.y;
  }
  return labels;
}

std::size_t GroupOf(int y, std::span<const int> s) {
  std::size_t mask = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] != y) mask |= std::size_t{1} << k;
  }
  return 2 * mask + (y == 1 ? 0 : 1);
}

Dataset::Dataset(WorldSpec spec, RowMatrix z, std::vector<int> y,
                 std::vector<int> s_flat)
    : spec_(std::move(spec)),
      map_(SubspaceMap::For(spec_)),
      z_(std::move(z)),
      y_(std::move(y)),
      s_(std::move(s_flat)),
      num_spurious_(spec_.num_spurious()) {
  if (static_cast<std::size_t>(z_.rows()) != y_.size() ||
      s_.size() != y_.size() * num_spurious_) {
    throw DimensionMismatch("dataset: row counts of z, y and s disagree");
  }
  if (static_cast<std::size_t>(z_.cols()) != map_.dim) {
    throw DimensionMismatch(fmt::format(
        "dataset: z has {} columns, world needs {}", z_.cols(), map_.dim));
  }
  group_.resize(y_.size());
  for (std::size_t i = 0; i < y_.size(); ++i) group_[i] = GroupOf(y_[i], s(i));
}

std::span<const double> Dataset::row(std::size_t i) const {
  return {z_.data() + i * dim(), dim()};
}

std::span<const int> Dataset::s(std::size_t i) const {
  return {s_.data() + i * num_spurious_, num_spurious_};
}

std::vector<int> Dataset::spurious_labels(std::size_t k) const {
  if (k >= num_spurious_) throw InvalidArgument("no such spurious block");
  std::vector<int> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = s_[i * num_spurious_ + k];
  return out;
}

std::vector<std::size_t> Dataset::group_counts() const {
  std::vector<std::size_t> counts(spec_.num_groups(), 0);
  for (std::size_t g : group_) ++counts[g];
  return counts;
}

LatentSample Dataset::sample(std::size_t i) const {
  LatentSample out;
  out.z = z_.row(static_cast<Eigen::Index>(i)).transpose();
  out.y = y_[i];
  const auto labels = s(i);
  out.s.assign(labels.begin(), labels.end());
  out.group = group_[i];
  return out;
}

std::vector<std::size_t> GroupSizes(const WorldSpec& spec) {
  spec.Validate();
  const std::size_t groups = spec.num_groups();
  std::vector<double> quota(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t mask = g >> 1;
    double p = 0.5;
    for (std::size_t k = 0; k < spec.num_spurious(); ++k) {
      const double beta = spec.spurious_blocks[k].bias;
      p *= ((mask >> k) & 1u) ? 1.0 - beta : beta;
    }
    quota[g] = p * static_cast<double>(spec.n);
  }
  std::vector<std::size_t> sizes(groups);
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    sizes[g] = static_cast<std::size_t>(std::floor(quota[g]));
    assigned += sizes[g];
  }
  std::vector<std::size_t> order(groups);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quota[a] - std::floor(quota[a]) > quota[b] - std::floor(quota[b]);
  });
  for (std::size_t i = 0; assigned < spec.n; ++i, ++assigned) {
    ++sizes[order[i % groups]];
  }
  for (std::size_t g = 0; g < groups; ++g) {
    if (sizes[g] == 0) {
      throw InvalidArgument(fmt::format(
          "world: n = {} leaves group {} empty at this bias", spec.n, g));
    }
  }
  return sizes;
}

namespace {

Dataset Generate(const WorldSpec& spec, const std::vector<std::size_t>& sizes,
                 std::uint32_t repetition, StreamDomain domain) {
  const SubspaceMap map = SubspaceMap::For(spec);
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  const std::size_t k_blocks = spec.num_spurious();
  RowMatrix z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(map.dim));
  std::vector<int> y(n);
  std::vector<int> s(n * k_blocks);

  std::size_t row = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const GroupLabels labels = LabelsOfGroup(g, k_blocks);
    const StreamId stream{spec.seed, domain, repetition,
                          static_cast<std::uint32_t>(g)};
    for (std::size_t j = 0; j < sizes[g]; ++j, ++row) {
      CounterRng rng(stream, static_cast<std::uint32_t>(j));
      double* out = z.data() + row * map.dim;
      for (std::size_t c = map.stable.begin; c < map.stable.end; ++c) {
        out[c] = labels.y + spec.sigma_y * rng.Normal();
      }
      for (std::size_t k = 0; k < k_blocks; ++k) {
        const double sigma = spec.spurious_blocks[k].sigma;
        for (std::size_t c = map.spurious[k].begin; c < map.spurious[k].end; ++c) {
          out[c] = labels.s[k] + sigma * rng.Normal();
        }
        s[row * k_blocks + k] = labels.s[k];
      }
      y[row] = labels.y;
    }
  }
  WorldSpec stored = spec;
  stored.n = n;
  return Dataset(std::move(stored), std::move(z), std::move(y), std::move(s));
}

}  // namespace

Dataset SampleDataset(const WorldSpec& spec, std::uint32_t repetition,
                      StreamDomain domain) {
  return Generate(spec, GroupSizes(spec), repetition, domain);
}

std::vector<Dataset> SampleWithSharedNoise(std::span<const WorldSpec> specs,
                                           std::uint32_t repetition, StreamDomain domain) {
  std::vector<Dataset> out;
  if (specs.empty()) return out;
  const WorldSpec& base = specs.front();
  const std::vector<std::size_t> sizes = GroupSizes(base);
  for (const WorldSpec& spec : specs) {
    spec.Validate();
    bool same = spec.d == base.d && spec.n == base.n && spec.seed == base.seed &&
                spec.num_spurious() == base.num_spurious();
    for (std::size_t k = 0; same && k < spec.num_spurious(); ++k) {
      same = spec.spurious_blocks[k].dim == base.spurious_blocks[k].dim &&
             spec.spurious_blocks[k].bias == base.spurious_blocks[k].bias;
    }
    if (!same) {
      throw InvalidArgument("shared-noise sampling needs worlds that differ only in sigmas");
    }
  }
  // Standard-normal draws in exactly the order Generate consumes them.
  const SubspaceMap map = SubspaceMap::For(base);
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  RowMatrix noise(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(map.dim));
  std::size_t row = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const StreamId stream{base.seed, domain, repetition, static_cast<std::uint32_t>(g)};
    for (std::size_t j = 0; j < sizes[g]; ++j, ++row) {
      CounterRng rng(stream, static_cast<std::uint32_t>(j));
      double* out_row = noise.data() + row * map.dim;
      for (std::size_t c = 0; c < map.dim; ++c) out_row[c] = rng.Normal();
    }
  }
  const std::size_t k_blocks = base.num_spurious();
  for (const WorldSpec& spec : specs) {
    RowMatrix z(noise.rows(), noise.cols());
    std::vector<int> y(n);
    std::vector<int> s(n * k_blocks);
    row = 0;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
      const GroupLabels labels = LabelsOfGroup(g, k_blocks);
      for (std::size_t j = 0; j < sizes[g]; ++j, ++row) {
        const double* eps = noise.data() + row * map.dim;
        double* out_row = z.data() + row * map.dim;
        for (std::size_t c = map.stable.begin; c < map.stable.end; ++c) {
          out_row[c] = labels.y + spec.sigma_y * eps[c];
        }
        for (std::size_t k = 0; k < k_blocks; ++k) {
          const double sigma = spec.spurious_blocks[k].sigma;
          for (std::size_t c = map.spurious[k].begin; c < map.spurious[k].end; ++c) {
            out_row[c] = labels.s[k] + sigma * eps[c];
          }
          s[row * k_blocks + k] = labels.s[k];
        }
        y[row] = labels.y;
      }
    }
    WorldSpec stored = spec;
    stored.n = n;
    out.emplace_back(std::move(stored), std::move(z), std::move(y), std::move(s));
  }
  return out;
}

Dataset SampleBalanced(const WorldSpec& spec, std::size_t per_group,
                       std::uint32_t repetition) {
  spec.Validate();
  if (per_group == 0) throw InvalidArgument("balanced set needs per_group >= 1");
  const std::vector<std::size_t> sizes(spec.num_groups(), per_group);
  return Generate(spec, sizes, repetition, StreamDomain::kEvalData);
}

OracleModel::OracleModel(Kind kind, std::size_t block, SubspaceMap map)
    : kind_(kind), block_(block), map_(std::move(map)) {}

OracleModel OracleModel::BayesTarget(const SubspaceMap& map) {
  return OracleModel(Kind::kBayesTarget, 0, map);
}

OracleModel OracleModel::BayesSpurious(const SubspaceMap& map, std::size_t block) {
  if (block >= map.spurious.size()) {
    throw InvalidArgument(fmt::format("oracle: no spurious block {}", block));
  }
  return OracleModel(Kind::kBayesSpurious, block, map);
}

int OracleModel::Predict(std::span<const double> z) const {
  if (z.size() != map_.dim) {
    throw DimensionMismatch(fmt::format("oracle: latent has {} coordinates, expected {}",
                                        z.size(), map_.dim));
  }
  const IndexRange range =
      kind_ == Kind::kBayesTarget ? map_.stable : map_.spurious[block_];
  double sum = 0.0;
  for (std::size_t c = range.begin; c < range.end; ++c) sum += z[c];
  return sum < 0.0 ? -1 : 1;
}

void WriteDatasetCsv(const Dataset& data, std::ostream& out) {
  for (std::size_t c = 0; c < data.dim(); ++c) fmt::print(out, "z_{},", c);
  out << 'y';
  for (std::size_t k = 0; k < data.num_spurious(); ++k) fmt::print(out, ",s_{}", k);
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.row(i)) out << FormatDouble(v) << ',';
    out << data.y(i);
    for (int s : data.s(i)) out << ',' << s;
    out << '\n';
  }
}

}  // namespace fairlatent
