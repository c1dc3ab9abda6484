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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <vector>

#include "smpool/errors.h"
#include "smpool/moments.h"
#include "smpool/normalize.h"
#include "smpool/parallel.h"
#include "smpool/smp.h"
#include "smpool/tensor.h"
#include "smpool/windows.h"

namespace smpool {

// Vector-Jacobian product of smp_forward: given dL/d(output), returns
// dL/d(input). Chains the normalization backward, the optional
// standardization, the per-window moment gradients and col2im.
//
// `opts` must match the forward call (batch-norm mode and state, frozen
// max-norm divisors are ignored since max norm is straight-through anyway).
template <typename Scalar>
BasicTensor<Scalar> smp_backward(const BasicTensor<Scalar>& input,
                                 const PoolSpec& pool, const MomentSpec& spec,
                                 const BasicTensor<Scalar>& upstream,
                                 const ForwardOptions& opts = {}) {
  spec.validate();
  const MomentLayout layout = moment_layout(input.shape(), pool, spec.n);
  if (upstream.size() != layout.shape().size() ||
      upstream.shape().nchw() != layout.shape().nchw()) {
    throw ShapeError("upstream gradient has shape " +
                     upstream.shape().to_string() + ", forward output is " +
                     layout.shape().to_string());
  }
  const Scalar eps = static_cast<Scalar>(spec.eps_norm);
  const BasicTensor<Scalar> raw = raw_moments(input, pool, spec.n, opts.threads);
  BasicTensor<Scalar> g(layout.shape(), upstream.data());

  if (spec.n >= 3) {
    BasicTensor<Scalar> pre = raw;
    if (spec.standardize_pre_norm) {
      detail::standardize_high_orders(pre, layout, eps);
    }

    if (spec.norm == NormKind::batch) {
      const ChannelRows<Scalar> dx = batch_norm_backward(
          detail::gather_batch_rows(pre, layout),
          detail::gather_batch_rows(g, layout), opts.batch_mode,
          static_cast<const BatchNormState*>(opts.batch_state), eps);
      detail::scatter_batch_rows(dx, layout, g);
    } else if (spec.norm != NormKind::none) {
      for (const Segment& grp : high_order_groups(layout, spec.norm_axis)) {
        const auto x = pre.data().segment(grp.start, grp.length);
        auto gs = g.data().segment(grp.start, grp.length);
        if (spec.norm == NormKind::layer) {
          gs = layer_norm_backward(x, gs, eps);
        } else {
          gs = max_norm_backward(x, gs, eps);
        }
      }
    }

    if (spec.standardize_pre_norm) {
      const Index p = layout.positions();
      for (Index s = 0; s < layout.batch; ++s) {
        for (Index c = 0; c < layout.channels; ++c) {
          const Index o2 = layout.offset(s, layout.channel(2, c));
          const Index o3 = layout.offset(s, layout.channel(3, c));
          for (Index q = 0; q < p; ++q) {
            const Scalar m2 = raw[o2 + q];
            const Scalar sigma = std::sqrt(m2);
            const Scalar d3 = m2 * sigma + eps;
            const Scalar g3 = g[o3 + q];
            g[o3 + q] = g3 / d3;
            g[o2 + q] -= g3 * raw[o3 + q] * Scalar(1.5) * sigma / (d3 * d3);
            if (spec.n >= 4) {
              const Index o4 = layout.offset(s, layout.channel(4, c));
              const Scalar d4 = m2 * m2 + eps;
              const Scalar g4 = g[o4 + q];
              g[o4 + q] = g4 / d4;
              g[o2 + q] -= g4 * raw[o4 + q] * Scalar(2) * m2 / (d4 * d4);
            }
          }
        }
      }
    }
  }

  const bool padded = detail::has_padding(pool);
  const WindowMask mask =
      padded ? detail::checked_window_mask(input.height(), input.width(), pool)
             : WindowMask();
  BasicTensor<Scalar> dx(input.shape());
  const Index C = layout.channels;
  parallel_for(layout.batch * C, opts.threads, [&](Index plane_index) {
    const Index s = plane_index / C;
    const Index c = plane_index % C;
    const WindowMatrix<Scalar> wm = im2col_plane(input.plane(s, c), pool);
    WindowMatrix<Scalar> wg;
    wg.values.setZero(wm.rows(), wm.cols());
    wg.out_h = wm.out_h;
    wg.out_w = wm.out_w;

    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> g_orders(spec.n);
    std::vector<Scalar> buffer;
    for (Index r = 0; r < wm.rows(); ++r) {
      for (int i = 1; i <= spec.n; ++i) {
        g_orders(i - 1) = g[layout.offset(s, layout.channel(i, c)) + r];
      }
      if (!padded) {
        wg.values.row(r).noalias() =
            g_orders * moment_gradients(wm.values.row(r), spec.n);
        continue;
      }
      detail::gather_valid(wm, mask, r, buffer);
      const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> row_grad =
          g_orders *
          moment_gradients(
              Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>(
                  buffer.data(), static_cast<Index>(buffer.size())),
              spec.n);
      Index k = 0;
      for (Index j = 0; j < wm.cols(); ++j) {
        if (mask(r, j)) wg.values(r, j) = row_grad(k++);
      }
    }
    auto plane = dx.plane(s, c);
    col2im_plane_accumulate(wg, pool, plane);
  });
  return dx;
}

// ---------------------------------------------------------------------------

struct GradCheckReport {
  double max_rel_error = 0;
  double max_abs_error = 0;
  Index worst_index = 0;
  Index n_checked = 0;
  bool passed = false;
  double tolerance = 0;
};

inline constexpr double kGradCheckStep = 1e-6;
inline constexpr double kGradCheckTolerance = 1e-6;
inline constexpr double kRelErrorFloor = 1e-12;

using AnalyticBackward = std::function<Tensor(const Tensor& x,
                                              const Tensor& upstream)>;

// Compares the analytic VJP against central differences of
// <forward(x), upstream>, one input element at a time. Relative error per
// element is |a - d| / max(|a|, |d|, 1e-12).
//
// `forward` runs in RefScalar. With the default extended precision, the
// rounding noise of the difference quotient sits far below the 1e-6
// tolerance even for gradient entries close to zero; RefScalar = double
// gives a pure 64-bit check.
template <typename RefScalar = long double, typename Forward>
GradCheckReport finite_diff_check(Forward&& forward,
                                  const AnalyticBackward& backward,
                                  const Tensor& x, const Tensor& upstream,
                                  double h = kGradCheckStep,
                                  double tol = kGradCheckTolerance,
                                  int threads = 1) {
  if (!(h > 0)) throw SpecError("finite-difference step must be positive");
  using RefTensor = BasicTensor<RefScalar>;
  const RefTensor xr = x.template cast<RefScalar>();
  const RefTensor y0 = forward(xr);
  const RefTensor y1 = forward(xr);
  if (!(y0.shape() == y1.shape()) ||
      std::memcmp(y0.data().data(), y1.data().data(),
                  sizeof(RefScalar) * static_cast<std::size_t>(y0.size())) !=
          0) {
    throw NondeterminismError(
        "forward operator returned different results for the same input");
  }
  if (upstream.size() != y0.size()) {
    throw ShapeError("upstream has " + std::to_string(upstream.size()) +
                     " elements, forward output has " +
                     std::to_string(y0.size()));
  }
  const Tensor analytic = backward(x, upstream);
  if (analytic.size() != x.size()) {
    throw ShapeError("analytic gradient size does not match the input");
  }
  const auto u = upstream.data().template cast<RefScalar>().eval();

  std::vector<double> abs_err(static_cast<std::size_t>(x.size()));
  std::vector<double> rel_err(static_cast<std::size_t>(x.size()));
  parallel_for(x.size(), threads, [&](Index j) {
    RefTensor xp = xr;
    RefTensor xm = xr;
    xp[j] += static_cast<RefScalar>(h);
    xm[j] -= static_cast<RefScalar>(h);
    const RefTensor yp = forward(xp);
    const RefTensor ym = forward(xm);
    const RefScalar numeric =
        ((yp.data() - ym.data()) * u).sum() / (xp[j] - xm[j]);
    const double d = static_cast<double>(numeric);
    const double a = analytic[j];
    const double err = std::abs(a - d);
    const double denom = std::max({std::abs(a), std::abs(d), kRelErrorFloor});
    const auto idx = static_cast<std::size_t>(j);
    abs_err[idx] = std::isfinite(err) ? err
                                      : std::numeric_limits<double>::infinity();
    rel_err[idx] = std::isfinite(err)
                       ? err / denom
                       : std::numeric_limits<double>::infinity();
  });

  GradCheckReport report;
  report.tolerance = tol;
  report.n_checked = x.size();
  for (std::size_t j = 0; j < rel_err.size(); ++j) {
    report.max_abs_error = std::max(report.max_abs_error, abs_err[j]);
    if (rel_err[j] > report.max_rel_error) {
      report.max_rel_error = rel_err[j];
      report.worst_index = static_cast<Index>(j);
    }
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

// Gradient check of smp_forward / smp_backward for one configuration. Max
// norm is checked against its straight-through surrogate: the forward used
// for differencing keeps the divisors frozen at their values at x.
GradCheckReport check_smp_gradient(const Tensor& x, const PoolSpec& pool,
                                   const MomentSpec& spec,
                                   const Tensor& upstream,
                                   double h = kGradCheckStep,
                                   double tol = kGradCheckTolerance,
                                   int threads = 1);

// For each order i in 1..spec.n, the largest |dL/dx| when the upstream
// gradient is a fixed non-constant pattern on the order-i output channels
// and zero elsewhere. A constant pattern would be annihilated by layer norm.
std::vector<double> gradient_magnitude_profile(const Tensor& x,
                                               const PoolSpec& pool,
                                               const MomentSpec& spec);

// The fixed upstream pattern used by gradient_magnitude_profile.
Tensor profile_upstream(const Shape& output_shape, const MomentLayout& layout,
                        int order);

}  // namespace smpool
