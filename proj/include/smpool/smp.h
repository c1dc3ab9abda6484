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
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "smpool/errors.h"
#include "smpool/moments.h"
#include "smpool/normalize.h"
#include "smpool/parallel.h"
#include "smpool/tensor.h"
#include "smpool/windows.h"

namespace smpool {

// Grouping used by layer and max norm.
//   per_order: one group per (sample, order i >= 3) covering all C channels
//              and all output positions of that order.
//   joint:     one group per sample covering every order >= 3 at once.
enum class NormAxis { per_order, joint };

struct MomentSpec {
  int n = 1;
  NormKind norm = NormKind::none;
  double eps_norm = kNormEps;
  // Divide m3 by (sigma^3 + eps) and m4 by (sigma^4 + eps) before the
  // normalization step.
  bool standardize_pre_norm = false;
  NormAxis norm_axis = NormAxis::per_order;
  // Allows n >= 3 with norm == none. Training without normalization of the
  // high orders is numerically unstable; only stability experiments want it.
  bool unsafe_no_norm = false;

  static MomentSpec make(int n, NormKind norm = NormKind::layer,
                         bool unsafe_no_norm = false) {
    MomentSpec s;
    s.n = n;
    s.norm = norm;
    s.unsafe_no_norm = unsafe_no_norm;
    s.validate();
    return s;
  }

  void validate() const {
    detail::check_order(n);
    if (!(eps_norm > 0)) throw SpecError("eps_norm must be positive");
    if (n >= 3 && norm == NormKind::none && !unsafe_no_norm) {
      throw SpecError(
          "SMP(" + std::to_string(n) +
          ") without normalization of orders >= 3 is refused by the "
          "unsafe-no-norm guard");
    }
  }

  bool normalizes_high_orders() const {
    return n >= 3 && norm != NormKind::none;
  }
};

struct ForwardOptions {
  int threads = 1;
  BatchNormMode batch_mode = BatchNormMode::training;
  // Running statistics; updated in training mode, read in eval mode.
  BatchNormState* batch_state = nullptr;
  // Max-norm divisors to use instead of recomputing them, one per group in
  // high_order_groups() order. Used to evaluate the straight-through
  // surrogate that max_norm_backward differentiates.
  const std::vector<double>* frozen_max_divisors = nullptr;
};

// Index bookkeeping for an [N, n*C, H', W'] moment-major output.
struct MomentLayout {
  Index batch = 1;
  Index channels = 1;
  int order = 1;
  Index out_h = 1;
  Index out_w = 1;

  Index positions() const { return out_h * out_w; }
  Index channel(int moment_order, Index c) const {
    return (moment_order - 1) * channels + c;
  }
  // Flat offset of (sample, output channel, position 0).
  Index offset(Index sample, Index out_channel) const {
    return (sample * order * channels + out_channel) * positions();
  }
  Shape shape() const {
    return Shape::nchw(batch, order * channels, out_h, out_w);
  }
};

inline MomentLayout moment_layout(const Shape& input, const PoolSpec& pool,
                                  int n) {
  const auto [batch, channels, h, w] = input.nchw();
  const OutputDims out = output_dims(h, w, pool);
  return {batch, channels, n, out.h, out.w};
}

// Contiguous [start, start + length) runs of the output that form one layer-
// or max-norm group.
struct Segment {
  Index start = 0;
  Index length = 0;
};

inline std::vector<Segment> high_order_groups(const MomentLayout& layout,
                                              NormAxis axis) {
  std::vector<Segment> groups;
  if (layout.order < 3) return groups;
  const Index per_order = layout.channels * layout.positions();
  for (Index s = 0; s < layout.batch; ++s) {
    if (axis == NormAxis::joint) {
      groups.push_back({layout.offset(s, layout.channel(3, 0)),
                        (layout.order - 2) * per_order});
      continue;
    }
    for (int i = 3; i <= layout.order; ++i) {
      groups.push_back({layout.offset(s, layout.channel(i, 0)), per_order});
    }
  }
  return groups;
}

namespace detail {

// Validity mask for the geometry; rejects windows that see only padding.
inline WindowMask checked_window_mask(Index h, Index w, const PoolSpec& pool) {
  WindowMask mask = window_mask(h, w, pool);
  for (Index r = 0; r < mask.rows(); ++r) {
    if (!mask.row(r).any()) {
      throw GeometryError("pooling window " + std::to_string(r) +
                          " covers only padding cells");
    }
  }
  return mask;
}

inline bool has_padding(const PoolSpec& pool) {
  return pool.pad_h > 0 || pool.pad_w > 0;
}

// Gathers the in-bounds cells of window row `r` into `buffer`.
template <typename Scalar>
void gather_valid(const WindowMatrix<Scalar>& wm, const WindowMask& mask,
                  Index r, std::vector<Scalar>& buffer) {
  buffer.clear();
  for (Index j = 0; j < wm.cols(); ++j) {
    if (mask(r, j)) buffer.push_back(wm.values(r, j));
  }
}

// Batch-norm rows: one per high-order output channel, columns run over
// (sample, position).
template <typename Scalar>
ChannelRows<Scalar> gather_batch_rows(const BasicTensor<Scalar>& t,
                                      const MomentLayout& layout) {
  const Index first = layout.channel(3, 0);
  const Index rows = (layout.order - 2) * layout.channels;
  const Index p = layout.positions();
  ChannelRows<Scalar> out(rows, layout.batch * p);
  for (Index k = 0; k < rows; ++k) {
    for (Index s = 0; s < layout.batch; ++s) {
      out.row(k).segment(s * p, p) =
          t.data().segment(layout.offset(s, first + k), p).transpose();
    }
  }
  return out;
}

template <typename Scalar>
void scatter_batch_rows(const ChannelRows<Scalar>& rows,
                        const MomentLayout& layout, BasicTensor<Scalar>& t) {
  const Index first = layout.channel(3, 0);
  const Index p = layout.positions();
  for (Index k = 0; k < rows.rows(); ++k) {
    for (Index s = 0; s < layout.batch; ++s) {
      t.data().segment(layout.offset(s, first + k), p) =
          rows.row(k).segment(s * p, p).transpose();
    }
  }
}

// In-place m3 /= (sigma^3 + eps), m4 /= (sigma^4 + eps).
template <typename Scalar>
void standardize_high_orders(BasicTensor<Scalar>& t, const MomentLayout& layout,
                             Scalar eps) {
  const Index p = layout.positions();
  for (Index s = 0; s < layout.batch; ++s) {
    for (Index c = 0; c < layout.channels; ++c) {
      const Index o2 = layout.offset(s, layout.channel(2, c));
      for (Index q = 0; q < p; ++q) {
        const Scalar m2 = t[o2 + q];
        const Scalar sigma = std::sqrt(m2);
        t[layout.offset(s, layout.channel(3, c)) + q] /= m2 * sigma + eps;
        if (layout.order >= 4) {
          t[layout.offset(s, layout.channel(4, c)) + q] /= m2 * m2 + eps;
        }
      }
    }
  }
}

}  // namespace detail

// Mean and central moments 2..n of every pooling window, moment-major:
// output channel (i-1)*C + c holds order i of input channel c. Padding cells
// are excluded from the statistics.
template <typename Scalar>
BasicTensor<Scalar> raw_moments(const BasicTensor<Scalar>& input,
                                const PoolSpec& pool, int n, int threads = 1) {
  detail::check_order(n);
  const MomentLayout layout = moment_layout(input.shape(), pool, n);
  const bool padded = detail::has_padding(pool);
  const WindowMask mask =
      padded ? detail::checked_window_mask(input.height(), input.width(), pool)
             : WindowMask();

  BasicTensor<Scalar> out(layout.shape());
  const Index C = layout.channels;
  parallel_for(layout.batch * C, threads, [&](Index plane_index) {
    const Index s = plane_index / C;
    const Index c = plane_index % C;
    const WindowMatrix<Scalar> wm = im2col_plane(input.plane(s, c), pool);
    std::vector<Scalar> buffer;
    buffer.reserve(static_cast<std::size_t>(wm.cols()));
    for (Index r = 0; r < wm.rows(); ++r) {
      MomentVector<Scalar> mv;
      if (padded) {
        detail::gather_valid(wm, mask, r, buffer);
        mv = central_moments(std::span<const Scalar>(buffer), n);
      } else {
        mv = central_moments(wm.values.row(r), n);
      }
      for (int i = 1; i <= n; ++i) {
        out[layout.offset(s, layout.channel(i, c)) + r] = mv[i];
      }
    }
  });
  return out;
}

// Max-norm divisor of every high-order group of a pre-normalization tensor.
template <typename Scalar>
std::vector<double> max_norm_divisors(const BasicTensor<Scalar>& pre_norm,
                                      const MomentLayout& layout,
                                      const MomentSpec& spec) {
  std::vector<double> out;
  for (const Segment& g : high_order_groups(layout, spec.norm_axis)) {
    out.push_back(static_cast<double>(max_norm_divisor(
        pre_norm.data().segment(g.start, g.length),
        static_cast<Scalar>(spec.eps_norm))));
  }
  return out;
}

// Values entering the normalization step: raw moments, with m3/m4
// standardized when the spec asks for it.
template <typename Scalar>
BasicTensor<Scalar> pre_norm_moments(const BasicTensor<Scalar>& input,
                                     const PoolSpec& pool,
                                     const MomentSpec& spec, int threads = 1) {
  BasicTensor<Scalar> t = raw_moments(input, pool, spec.n, threads);
  if (spec.n >= 3 && spec.standardize_pre_norm) {
    detail::standardize_high_orders(
        t, moment_layout(input.shape(), pool, spec.n),
        static_cast<Scalar>(spec.eps_norm));
  }
  return t;
}

// Normalizes orders >= 3 in place. Orders 1 and 2 are never touched.
template <typename Scalar>
void normalize_high_orders(BasicTensor<Scalar>& t, const MomentLayout& layout,
                           const MomentSpec& spec,
                           const ForwardOptions& opts = {}) {
  if (!spec.normalizes_high_orders()) return;
  const Scalar eps = static_cast<Scalar>(spec.eps_norm);
  if (spec.norm == NormKind::batch) {
    const ChannelRows<Scalar> rows = detail::gather_batch_rows(t, layout);
    detail::scatter_batch_rows(
        batch_norm(rows, layout.batch, opts.batch_mode, opts.batch_state, eps),
        layout, t);
    return;
  }
  const std::vector<Segment> groups = high_order_groups(layout, spec.norm_axis);
  if (opts.frozen_max_divisors &&
      opts.frozen_max_divisors->size() != groups.size()) {
    throw ShapeError("frozen max-norm divisors do not match the group count");
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto seg = t.data().segment(groups[g].start, groups[g].length);
    if (spec.norm == NormKind::layer) {
      seg = layer_norm(seg, eps);
    } else if (opts.frozen_max_divisors) {
      seg /= static_cast<Scalar>((*opts.frozen_max_divisors)[g]);
    } else {
      seg = max_norm(seg, eps);
    }
  }
}

// SMP(n): [N, C, H, W] -> [N, n*C, H', W'].
template <typename Scalar>
BasicTensor<Scalar> smp_forward(const BasicTensor<Scalar>& input,
                                const PoolSpec& pool, const MomentSpec& spec,
                                const ForwardOptions& opts = {}) {
  spec.validate();
  BasicTensor<Scalar> t = pre_norm_moments(input, pool, spec, opts.threads);
  normalize_high_orders(t, moment_layout(input.shape(), pool, spec.n), spec,
                        opts);
  return t;
}

// Spatial average pooling; the n = 1 case of smp_forward.
template <typename Scalar>
BasicTensor<Scalar> sap_forward(const BasicTensor<Scalar>& input,
                                const PoolSpec& pool, int threads = 1) {
  ForwardOptions opts;
  opts.threads = threads;
  return smp_forward(input, pool, MomentSpec{}, opts);
}

// Multiply-accumulate count of one forward pass. Counting model, per output
// cell whose window holds m in-bounds values:
//   order 1          m      (accumulate)
//   each order i>=2  m + 1  (one fused running-power MAC per value, reusing
//                            the order i-1 power, then the 1/m scale)
//   standardize      1 + 2*(n-2)  (sqrt, then power and divide per order)
// and per normalized element: layer 3, batch 3, max 2.
struct OpCostReport {
  std::int64_t mul_add_count = 0;
  std::int64_t extra_vs_sap = 0;
};

OpCostReport op_cost(const Shape& shape, const PoolSpec& pool,
                     const MomentSpec& spec);

}  // namespace smpool
