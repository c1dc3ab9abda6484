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

#include <string>
#include <utility>
#include <vector>

#include "smpool/errors.h"
#include "smpool/tensor.h"

namespace smpool {

// Pooling window geometry. Identical to the geometry of a convolution with
// the same kernel, stride, padding and dilation.
struct PoolSpec {
  Index kernel_h = 1;
  Index kernel_w = 1;
  Index stride_h = 1;
  Index stride_w = 1;
  Index pad_h = 0;
  Index pad_w = 0;
  Index dilation_h = 1;
  Index dilation_w = 1;

  static PoolSpec square(Index kernel, Index stride = 1, Index pad = 0,
                         Index dilation = 1) {
    return {kernel, kernel, stride, stride, pad, pad, dilation, dilation};
  }

  // One window covering the whole h x w plane.
  static PoolSpec global(Index h, Index w) { return {h, w, 1, 1, 0, 0, 1, 1}; }

  Index window_size() const { return kernel_h * kernel_w; }

  friend bool operator==(const PoolSpec&, const PoolSpec&) = default;
};

struct OutputDims {
  Index h = 0;
  Index w = 0;
  friend bool operator==(const OutputDims&, const OutputDims&) = default;
};

namespace detail {

inline Index output_extent(Index in, Index kernel, Index stride, Index pad,
                           Index dilation, const char* axis) {
  if (in < 1 || kernel < 1 || stride < 1 || pad < 0 || dilation < 1) {
    throw GeometryError(std::string("invalid pooling geometry along ") + axis +
                        ": extents, kernel, stride and dilation must be "
                        "positive and padding non-negative");
  }
  const Index effective = dilation * (kernel - 1) + 1;
  const Index padded = in + 2 * pad;
  if (effective > padded) {
    throw GeometryError(std::string("window does not fit along ") + axis +
                        ": effective kernel " + std::to_string(effective) +
                        " exceeds padded extent " + std::to_string(padded));
  }
  return (padded - effective) / stride + 1;
}

}  // namespace detail

// out = floor((in + 2*pad - dilation*(kernel-1) - 1) / stride) + 1
inline OutputDims output_dims(Index h, Index w, const PoolSpec& spec) {
  return {detail::output_extent(h, spec.kernel_h, spec.stride_h, spec.pad_h,
                                spec.dilation_h, "height"),
          detail::output_extent(w, spec.kernel_w, spec.stride_w, spec.pad_w,
                                spec.dilation_w, "width")};
}

using WindowMask =
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// im2col result for one plane. Row r is the window anchored at output
// position (r / out_w, r % out_w), flattened in raster order.
template <typename Scalar>
struct WindowMatrix {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor>;
  Matrix values;
  // Same shape as `values`; true where the cell lies inside the input.
  // Empty unless extraction was asked to track validity.
  WindowMask valid;
  Index out_h = 0;
  Index out_w = 0;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  bool has_mask() const { return valid.size() != 0; }
};

// Validity of every (window, kernel cell) pair; false marks padding.
inline WindowMask window_mask(Index h, Index w, const PoolSpec& spec) {
  const OutputDims out = output_dims(h, w, spec);
  WindowMask mask(out.h * out.w, spec.window_size());
  for (Index oy = 0; oy < out.h; ++oy) {
    for (Index ox = 0; ox < out.w; ++ox) {
      const Index row = oy * out.w + ox;
      for (Index ky = 0; ky < spec.kernel_h; ++ky) {
        const Index y = oy * spec.stride_h - spec.pad_h + ky * spec.dilation_h;
        for (Index kx = 0; kx < spec.kernel_w; ++kx) {
          const Index x =
              ox * spec.stride_w - spec.pad_w + kx * spec.dilation_w;
          mask(row, ky * spec.kernel_w + kx) = y >= 0 && y < h && x >= 0 && x < w;
        }
      }
    }
  }
  return mask;
}

// Extracts every window of an H x W plane into the rows of a matrix.
// Out-of-bounds cells hold `pad_value`.
template <typename Derived>
WindowMatrix<typename Derived::Scalar> im2col_plane(
    const Eigen::MatrixBase<Derived>& plane, const PoolSpec& spec,
    typename Derived::Scalar pad_value = 0, bool track_validity = false) {
  using Scalar = typename Derived::Scalar;
  const Index h = plane.rows();
  const Index w = plane.cols();
  const OutputDims out = output_dims(h, w, spec);

  WindowMatrix<Scalar> wm;
  wm.out_h = out.h;
  wm.out_w = out.w;
  wm.values.resize(out.h * out.w, spec.window_size());
  if (track_validity) wm.valid.resize(out.h * out.w, spec.window_size());

  for (Index oy = 0; oy < out.h; ++oy) {
    for (Index ox = 0; ox < out.w; ++ox) {
      const Index row = oy * out.w + ox;
      for (Index ky = 0; ky < spec.kernel_h; ++ky) {
        const Index y = oy * spec.stride_h - spec.pad_h + ky * spec.dilation_h;
        const bool y_in = y >= 0 && y < h;
        for (Index kx = 0; kx < spec.kernel_w; ++kx) {
          const Index x =
              ox * spec.stride_w - spec.pad_w + kx * spec.dilation_w;
          const Index col = ky * spec.kernel_w + kx;
          const bool in = y_in && x >= 0 && x < w;
          wm.values(row, col) = in ? plane(y, x) : pad_value;
          if (track_validity) wm.valid(row, col) = in;
        }
      }
    }
  }
  return wm;
}

// Per-channel im2col of sample `n` of an [N,]C,H,W tensor.
template <typename Scalar>
std::vector<WindowMatrix<Scalar>> im2col(const BasicTensor<Scalar>& t,
                                         const PoolSpec& spec,
                                         Scalar pad_value = 0,
                                         bool track_validity = false,
                                         Index n = 0) {
  std::vector<WindowMatrix<Scalar>> out;
  out.reserve(static_cast<std::size_t>(t.channels()));
  for (Index c = 0; c < t.channels(); ++c) {
    out.push_back(im2col_plane(t.plane(n, c), spec, pad_value, track_validity));
  }
  return out;
}

// Adjoint of im2col_plane: scatter-adds every window entry back onto the
// plane position it was read from. Padding entries are dropped.
template <typename Scalar, typename Derived>
void col2im_plane_accumulate(const WindowMatrix<Scalar>& grads,
                             const PoolSpec& spec,
                             Eigen::MatrixBase<Derived>& plane) {
  const Index h = plane.rows();
  const Index w = plane.cols();
  const OutputDims out = output_dims(h, w, spec);
  if (grads.rows() != out.h * out.w || grads.cols() != spec.window_size()) {
    throw ShapeError("window gradient matrix is " +
                     std::to_string(grads.rows()) + "x" +
                     std::to_string(grads.cols()) + ", geometry expects " +
                     std::to_string(out.h * out.w) + "x" +
                     std::to_string(spec.window_size()));
  }
  for (Index oy = 0; oy < out.h; ++oy) {
    for (Index ox = 0; ox < out.w; ++ox) {
      const Index row = oy * out.w + ox;
      for (Index ky = 0; ky < spec.kernel_h; ++ky) {
        const Index y = oy * spec.stride_h - spec.pad_h + ky * spec.dilation_h;
        if (y < 0 || y >= h) continue;
        for (Index kx = 0; kx < spec.kernel_w; ++kx) {
          const Index x =
              ox * spec.stride_w - spec.pad_w + kx * spec.dilation_w;
          if (x < 0 || x >= w) continue;
          plane(y, x) += grads.values(row, ky * spec.kernel_w + kx);
        }
      }
    }
  }
}

// Sums per-channel window gradients into a C x H x W tensor.
template <typename Scalar>
BasicTensor<Scalar> col2im_accumulate(
    const std::vector<WindowMatrix<Scalar>>& grads, const PoolSpec& spec,
    Index h, Index w) {
  if (grads.empty()) throw ShapeError("col2im needs at least one channel");
  BasicTensor<Scalar> out(
      Shape({static_cast<Index>(grads.size()), h, w}));
  for (Index c = 0; c < static_cast<Index>(grads.size()); ++c) {
    auto plane = out.plane(0, c);
    col2im_plane_accumulate(grads[static_cast<std::size_t>(c)], spec, plane);
  }
  return out;
}

}  // namespace smpool
