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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "smpool/grad.h"
#include "smpool/smp.h"
#include "smpool/tensor.h"
#include "smpool/windows.h"

namespace smpool {

// ---------------------------------------------------------------------------
// Synthetic feature maps.

enum class Pattern { checkerboard, solid, ramp, uniform_noise };

struct PatternParams {
  double a = 1.0;
  double b = 0.0;
  std::optional<std::uint64_t> seed;
};

Pattern parse_pattern(const std::string& name);

// checkerboard: a at (h + w) even, b otherwise, in every plane.
// solid:        every element a.
// ramp:         flat index j holds j.
// uniform_noise: uniform [a, b) from Xoshiro256(seed, 0) in flat order.
Tensor generate_pattern(Pattern pattern, const Shape& shape,
                        const PatternParams& params);

NormKind parse_norm(const std::string& name);
std::string to_string(NormKind kind);

// ---------------------------------------------------------------------------
// Training-stability experiment.
//
// Each step draws a batch of features x = input_scale * U[-1, 1) of shape
// batch x C x H x W and targets y = sum_{i,c} coef[i][c] * m_i(x_c)
// + 0.01 * N(0, 1), where m_i are the true global window moments (orders
// 1..4) and coef ~ U[-1, 1) is fixed per seed. The model is
// smp_forward(x, global, n, norm) followed by an affine head trained with
// plain gradient descent on 0.5 * mean squared error, head initialized at 0.
// Batch norm, when selected, keeps running statistics in training mode.

struct ToyTrainConfig {
  std::uint64_t seed = 17;
  int steps = 500;
  double lr = 0.05;
  int n = 4;
  NormKind norm = NormKind::layer;
  bool unsafe_no_norm = false;
  int batch = 8;
  Index channels = 4;
  Index height = 16;
  Index width = 16;
  double input_scale = 2.5;

  void validate() const;
};

struct ToyTrainReport {
  std::optional<int> step_of_first_nonfinite;
  double final_loss = 0;
  std::vector<double> loss_curve;
};

ToyTrainReport run_toytrain(const ToyTrainConfig& cfg);

// ---------------------------------------------------------------------------
// Micro-benchmark.

struct BenchConfig {
  Shape shape = Shape::nchw(1, 64, 32, 32);
  std::optional<PoolSpec> pool;  // global pooling when unset
  int n = 4;
  int repeats = 21;
  int threads = 1;
  std::uint64_t seed = 1;
};

struct BenchRow {
  std::string name;
  int n = 1;
  std::string norm;
  double median_ns = 0;
  double ns_per_output_element = 0;
  OpCostReport cost;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double smp4_over_sap_time = 0;
  double extra_ratio_n4_over_n2 = 0;
};

BenchReport run_bench(const BenchConfig& cfg);
std::string format_bench_table(const BenchReport& report);

// ---------------------------------------------------------------------------
// JSON reports. Non-finite reals are written as the strings "nan", "inf"
// and "-inf".

nlohmann::ordered_json real_to_json(double v);
nlohmann::ordered_json to_json(const GradCheckReport& r);
nlohmann::ordered_json to_json(const ToyTrainReport& r);
nlohmann::ordered_json to_json(const OpCostReport& r);
nlohmann::ordered_json to_json(const BenchReport& r);

}  // namespace smpool
