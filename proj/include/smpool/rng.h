// Copyright 2026 The smpool Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>

#include "smpool/tensor.h"

namespace smpool {

// xoshiro256** (Blackman & Vigna) seeded through splitmix64.
//
// Seeding: the four state words are four consecutive splitmix64 outputs
// starting from `seed ^ (0x9E3779B97F4A7C15 * (stream + 1))`, so distinct
// streams of one seed are decorrelated.
// uniform():   (next() >> 11) * 2^-53, in [0, 1).
// normal():    Box-Muller on two uniforms, cosine branch only.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

  // Integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

 private:
  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state);

// Tensor with independent uniform [lo, hi) entries drawn in flat order.
Tensor uniform_tensor(const Shape& shape, Xoshiro256& rng, double lo = -1.0,
                      double hi = 1.0);

}  // namespace smpool
