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

#include <cmath>
#include <string>

#include "smpool/errors.h"
#include "smpool/tensor.h"

namespace smpool {

// Normalization applied to moment channels of order >= 3.
enum class NormKind { none, layer, max, batch };

inline constexpr double kNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

template <typename Scalar>
using GroupArray = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// Layer norm over one group: y = (x - mean) / sqrt(var + eps). No affine.

template <typename Derived>
GroupArray<typename Derived::Scalar> layer_norm(
    const Eigen::ArrayBase<Derived>& x,
    typename Derived::Scalar eps = typename Derived::Scalar(kNormEps)) {
  using Scalar = typename Derived::Scalar;
  const Scalar mean = x.mean();
  const GroupArray<Scalar> centered = x - mean;
  const Scalar var = centered.square().mean();
  return centered / std::sqrt(var + eps);
}

// Vector-Jacobian product of layer_norm:
//   dx = (g - mean(g) - y * mean(g * y)) / sqrt(var + eps)
template <typename DerivedX, typename DerivedG>
GroupArray<typename DerivedX::Scalar> layer_norm_backward(
    const Eigen::ArrayBase<DerivedX>& x, const Eigen::ArrayBase<DerivedG>& g,
    typename DerivedX::Scalar eps = typename DerivedX::Scalar(kNormEps)) {
  using Scalar = typename DerivedX::Scalar;
  if (x.size() != g.size()) {
    throw ShapeError("layer_norm_backward: upstream size mismatch");
  }
  const Scalar mean = x.mean();
  const GroupArray<Scalar> centered = x - mean;
  const Scalar inv_std = Scalar(1) / std::sqrt(centered.square().mean() + eps);
  const GroupArray<Scalar> y = centered * inv_std;
  const Scalar g_mean = g.mean();
  const Scalar gy_mean = (g * y).mean();
  return (g - g_mean - y * gy_mean) * inv_std;
}

// ---------------------------------------------------------------------------
// Max norm: y = x / (max|x| + eps), so every output lies in [-1, 1].

template <typename Derived>
typename Derived::Scalar max_norm_divisor(
    const Eigen::ArrayBase<Derived>& x,
    typename Derived::Scalar eps = typename Derived::Scalar(kNormEps)) {
  return x.abs().maxCoeff() + eps;
}

template <typename Derived>
GroupArray<typename Derived::Scalar> max_norm(
    const Eigen::ArrayBase<Derived>& x,
    typename Derived::Scalar eps = typename Derived::Scalar(kNormEps)) {
  return x / max_norm_divisor(x, eps);
}

// Straight-through on the divisor: the gradient flows through the numerator
// only, as if max|x| were a constant. This is the exact gradient of
// x / d with d frozen at its forward value.
template <typename DerivedX, typename DerivedG>
GroupArray<typename DerivedX::Scalar> max_norm_backward(
    const Eigen::ArrayBase<DerivedX>& x, const Eigen::ArrayBase<DerivedG>& g,
    typename DerivedX::Scalar eps = typename DerivedX::Scalar(kNormEps)) {
  if (x.size() != g.size()) {
    throw ShapeError("max_norm_backward: upstream size mismatch");
  }
  return g / max_norm_divisor(x, eps);
}

// ---------------------------------------------------------------------------
// Batch norm. Each row of the group matrix is one channel; its columns are
// that channel's values over (N, H', W').

template <typename Scalar>
using ChannelRows =
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Running statistics owned by one training loop. Not thread-safe.
struct BatchNormState {
  Eigen::ArrayXd running_mean;
  Eigen::ArrayXd running_var;
  double momentum = kBatchNormMomentum;

  static BatchNormState fresh(Index channels) {
    return {Eigen::ArrayXd::Zero(channels), Eigen::ArrayXd::Ones(channels),
            kBatchNormMomentum};
  }
};

enum class BatchNormMode { training, eval };

// Training mode normalizes each row by its own statistics and, if `state`
// is given, folds them into the running estimates (the running variance
// uses the unbiased estimate). Eval mode uses the running estimates.
template <typename Scalar>
ChannelRows<Scalar> batch_norm(const ChannelRows<Scalar>& x, Index batch,
                               BatchNormMode mode, BatchNormState* state,
                               Scalar eps = Scalar(kNormEps)) {
  ChannelRows<Scalar> y(x.rows(), x.cols());
  if (mode == BatchNormMode::training) {
    if (batch < 2) {
      throw SpecError("batch norm in training mode needs batch size >= 2, got " +
                      std::to_string(batch));
    }
    if (state && state->running_mean.size() != x.rows()) {
      *state = BatchNormState::fresh(x.rows());
    }
    for (Index c = 0; c < x.rows(); ++c) {
      const Scalar mean = x.row(c).mean();
      const Scalar var = (x.row(c) - mean).square().mean();
      y.row(c) = (x.row(c) - mean) / std::sqrt(var + eps);
      if (state) {
        const double count = static_cast<double>(x.cols());
        const double unbiased =
            count > 1 ? static_cast<double>(var) * count / (count - 1) : 0.0;
        const double mom = state->momentum;
        state->running_mean[c] =
            (1 - mom) * state->running_mean[c] + mom * static_cast<double>(mean);
        state->running_var[c] =
            (1 - mom) * state->running_var[c] + mom * unbiased;
      }
    }
    return y;
  }
  if (!state || state->running_mean.size() != x.rows()) {
    throw SpecError("batch norm eval mode needs running statistics for " +
                    std::to_string(x.rows()) + " channels");
  }
  for (Index c = 0; c < x.rows(); ++c) {
    const Scalar mean = static_cast<Scalar>(state->running_mean[c]);
    const Scalar var = static_cast<Scalar>(state->running_var[c]);
    y.row(c) = (x.row(c) - mean) / std::sqrt(var + eps);
  }
  return y;
}

// Full Jacobian through the batch statistics in training mode; a per-channel
// rescale in eval mode.
template <typename Scalar>
ChannelRows<Scalar> batch_norm_backward(const ChannelRows<Scalar>& x,
                                        const ChannelRows<Scalar>& g,
                                        BatchNormMode mode,
                                        const BatchNormState* state,
                                        Scalar eps = Scalar(kNormEps)) {
  if (x.rows() != g.rows() || x.cols() != g.cols()) {
    throw ShapeError("batch_norm_backward: upstream shape mismatch");
  }
  ChannelRows<Scalar> dx(x.rows(), x.cols());
  for (Index c = 0; c < x.rows(); ++c) {
    if (mode == BatchNormMode::training) {
      dx.row(c) = layer_norm_backward(x.row(c).transpose(),
                                      g.row(c).transpose(), eps)
                      .transpose();
    } else {
      if (!state) throw SpecError("batch norm eval backward needs state");
      dx.row(c) = g.row(c) /
                  std::sqrt(static_cast<Scalar>(state->running_var[c]) + eps);
    }
  }
  return dx;
}

}  // namespace smpool
