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

#include "fairlatent/rng.hpp"

#include <cmath>
#include <numbers>

#include "fairlatent/error.hpp"

namespace fairlatent {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void MulHiLo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

Philox4x32::Counter Philox4x32::Block(Counter c, Key k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    MulHiLo(kPhiloxM0, c[0], hi0, lo0);
    MulHiLo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
  return c;
}

// Counter layout: word 3 = domain (8 bits) | repetition (24 bits),
// word 2 = substream, word 1 = element index, word 0 = block within element.
CounterRng::CounterRng(const StreamId& id, std::uint32_t index) {
  if (id.repetition >= kMaxRepetitions) {
    throw InvalidArgument("repetition index exceeds 2^24");
  }
  key_ = {static_cast<std::uint32_t>(id.seed),
          static_cast<std::uint32_t>(id.seed >> 32)};
  counter_ = {0u, index, id.substream,
              (static_cast<std::uint32_t>(id.domain) << 24) | id.repetition};
}

void CounterRng::Refill() {
  buffer_ = Philox4x32::Block(counter_, key_);
  ++counter_[0];
  buffered_ = 4;
}

std::uint32_t CounterRng::NextU32() {
  if (buffered_ == 0) Refill();
  return buffer_[4 - buffered_--];
}

std::uint64_t CounterRng::NextU64() {
  const std::uint64_t hi = NextU32();
  const std::uint64_t lo = NextU32();
  return (hi << 32) | lo;
}

double CounterRng::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

double CounterRng::Uniform(double lo, double hi) {
  return lo + (hi - lo) * Uniform();
}

double CounterRng::Normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // 1 - U lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - Uniform();
  const double u2 = Uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

std::uint64_t CounterRng::Below(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("Below() needs a positive bound");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do {
    x = NextU64();
  } while (x >= limit);
  return x % bound;
}

}  // namespace fairlatent
