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

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

#include "smpool/errors.h"
#include "smpool/tensor.h"

namespace smpool {

inline constexpr int kMaxMomentOrder = 4;

// Mean and population central moments E[(X - mu)^i], i = 2..4, of a finite
// multiset. Orders above the requested one are left at zero.
template <typename Scalar>
struct MomentVector {
  Scalar m1 = 0;
  Scalar m2 = 0;
  Scalar m3 = 0;
  Scalar m4 = 0;
  Index count = 0;

  // Moment of order i in 1..4.
  Scalar operator[](int order) const {
    switch (order) {
      case 1: return m1;
      case 2: return m2;
      case 3: return m3;
      default: return m4;
    }
  }
};

namespace detail {

inline void check_order(int n) {
  if (n < 1 || n > kMaxMomentOrder) {
    throw SpecError("moment order must be in 1..4, got " + std::to_string(n));
  }
}

}  // namespace detail

// Two-pass evaluation: the mean first, then centered power sums. Summation
// runs in the order the values are given.
template <typename Derived>
MomentVector<typename Derived::Scalar> central_moments(
    const Eigen::DenseBase<Derived>& values, int n) {
  using Scalar = typename Derived::Scalar;
  detail::check_order(n);
  const Index m = values.size();
  if (m == 0) throw SpecError("central_moments of an empty window");

  MomentVector<Scalar> out;
  out.count = m;
  Scalar sum = 0;
  for (Index j = 0; j < m; ++j) sum += values(j);
  const Scalar inv_m = Scalar(1) / static_cast<Scalar>(m);
  out.m1 = sum * inv_m;
  if (n == 1) return out;

  Scalar s2 = 0, s3 = 0, s4 = 0;
  for (Index j = 0; j < m; ++j) {
    const Scalar d = values(j) - out.m1;
    const Scalar d2 = d * d;
    s2 += d2;
    s3 += d2 * d;
    s4 += d2 * d2;
  }
  out.m2 = s2 * inv_m;
  if (n >= 3) out.m3 = s3 * inv_m;
  if (n >= 4) out.m4 = s4 * inv_m;
  return out;
}

template <typename Scalar>
MomentVector<Scalar> central_moments(std::span<const Scalar> values, int n) {
  return central_moments(
      Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>(
          values.data(), static_cast<Index>(values.size())),
      n);
}

// Partial derivatives of each moment with respect to each value: row i-1
// holds d m_i / d x_j. For i >= 2,
//   d m_i / d x_j = (i/m) [ (x_j - mu)^(i-1) - m_{i-1} ]
// with m_1 read as zero inside the bracket.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
moment_gradients(const Eigen::DenseBase<Derived>& values, int n) {
  using Scalar = typename Derived::Scalar;
  const MomentVector<Scalar> mv = central_moments(values, n);
  const Index m = values.size();
  const Scalar inv_m = Scalar(1) / static_cast<Scalar>(m);

  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> grads(n, m);
  grads.row(0).setConstant(inv_m);
  for (Index j = 0; j < m; ++j) {
    const Scalar d = values(j) - mv.m1;
    Scalar power = 1;  // d^(i-1)
    for (int i = 2; i <= n; ++i) {
      power *= d;
      const Scalar prev = i == 2 ? Scalar(0) : mv[i - 1];
      grads(i - 1, j) = static_cast<Scalar>(i) * inv_m * (power - prev);
    }
  }
  return grads;
}

}  // namespace smpool
