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

#ifndef FAIRLATENT_RNG_HPP_
#define FAIRLATENT_RNG_HPP_

#include <array>
#include <cstdint>

namespace fairlatent {

// Philox4x32 with 10 rounds. Stateless: maps (counter, key) to four words.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter Block(Counter counter, Key key);
};

// Purpose tags. Every tag owns a disjoint slice of the counter space, so two
// streams with different tags can never produce overlapping draws.
enum class StreamDomain : std::uint32_t {
  kTrainData = 1,
  kEvalData = 2,
  kAugment = 3,
  kEncoderInit = 4,
  kBatchOrder = 5,
  kGridProbes = 6,
  kLabelMask = 7,
};

inline constexpr std::uint32_t kMaxRepetitions = 1u << 24;

// Identifies one independent stream: (seed, domain, repetition, substream).
// The substream is usually a group, layer or epoch index.
struct StreamId {
  std::uint64_t seed = 0;
  StreamDomain domain = StreamDomain::kTrainData;
  std::uint32_t repetition = 0;
  std::uint32_t substream = 0;
};

// Counter-based generator. Draws for element `index` of a stream are a pure
// function of (StreamId, index), independent of how many other elements were
// generated before or on which thread.
class CounterRng {
 public:
  CounterRng(const StreamId& id, std::uint32_t index);

  std::uint32_t NextU32();
  std::uint64_t NextU64();
  // Uniform on [0, 1) with 53 random bits.
  double Uniform();
  // Uniform on [lo, hi).
  double Uniform(double lo, double hi);
  // Standard normal via Box-Muller; pairs are cached.
  double Normal();
  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t Below(std::uint64_t bound);

 private:
  void Refill();

  Philox4x32::Key key_;
  Philox4x32::Counter counter_;
  Philox4x32::Counter buffer_{};
  int buffered_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace fairlatent

#endif  // FAIRLATENT_RNG_HPP_
