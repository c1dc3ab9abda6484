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

#include <array>
#include <cmath>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "smpool/errors.h"

namespace smpool {

using Index = Eigen::Index;

// Extents of a tensor. Between one and four dims, interpreted as [N,]C,H,W
// with missing leading dims equal to one.
class Shape {
 public:
  Shape() : dims_{1} {}
  Shape(std::initializer_list<Index> dims) : Shape(std::vector<Index>(dims)) {}
  explicit Shape(std::vector<Index> dims) : dims_(std::move(dims)) {
    if (dims_.empty() || dims_.size() > 4) {
      throw ShapeError("tensor rank must be 1..4, got " +
                       std::to_string(dims_.size()));
    }
    for (Index d : dims_) {
      if (d < 1) throw ShapeError("tensor extents must be >= 1");
    }
  }

  static Shape nchw(Index n, Index c, Index h, Index w) {
    return Shape({n, c, h, w});
  }

  const std::vector<Index>& dims() const { return dims_; }
  Index rank() const { return static_cast<Index>(dims_.size()); }

  Index size() const {
    Index s = 1;
    for (Index d : dims_) s *= d;
    return s;
  }

  // Extents padded to N,C,H,W.
  std::array<Index, 4> nchw() const {
    std::array<Index, 4> out{1, 1, 1, 1};
    const std::size_t offset = 4 - dims_.size();
    for (std::size_t i = 0; i < dims_.size(); ++i) out[offset + i] = dims_[i];
    return out;
  }

  std::string to_string(const char* sep = "x") const {
    std::string s;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) s += sep;
      s += std::to_string(dims_[i]);
    }
    return s;
  }

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<Index> dims_;
};

// Dense row-major NCHW tensor over an Eigen column array. Element (n,c,h,w)
// lives at flat index ((n*C + c)*H + h)*W + w.
template <typename Scalar_>
class BasicTensor {
 public:
  using Scalar = Scalar_;
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using Plane = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic,
                              Eigen::RowMajor>;
  using PlaneMap = Eigen::Map<Plane>;
  using ConstPlaneMap = Eigen::Map<const Plane>;

  BasicTensor() : BasicTensor(Shape{}) {}

  explicit BasicTensor(Shape shape)
      : shape_(std::move(shape)), data_(Storage::Zero(shape_.size())) {
    cache_dims();
  }

  BasicTensor(Shape shape, Storage data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      throw ShapeError("data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.to_string());
    }
    cache_dims();
  }

  BasicTensor(Shape shape, std::initializer_list<Scalar> values)
      : BasicTensor(std::move(shape), from_list(values)) {}

  static BasicTensor constant(Shape shape, Scalar value) {
    BasicTensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index size() const { return data_.size(); }
  Index batch() const { return dims_[0]; }
  Index channels() const { return dims_[1]; }
  Index height() const { return dims_[2]; }
  Index width() const { return dims_[3]; }

  Index offset(Index n, Index c, Index h, Index w) const {
    return ((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w;
  }

  Scalar operator()(Index n, Index c, Index h, Index w) const {
    return data_[offset(n, c, h, w)];
  }
  Scalar& operator()(Index n, Index c, Index h, Index w) {
    return data_[offset(n, c, h, w)];
  }

  Scalar operator[](Index i) const { return data_[i]; }
  Scalar& operator[](Index i) { return data_[i]; }

  const Storage& data() const { return data_; }
  Storage& data() { return data_; }

  // H x W view of one (sample, channel) plane.
  ConstPlaneMap plane(Index n, Index c) const {
    return ConstPlaneMap(data_.data() + offset(n, c, 0, 0), dims_[2],
                         dims_[3]);
  }
  PlaneMap plane(Index n, Index c) {
    return PlaneMap(data_.data() + offset(n, c, 0, 0), dims_[2], dims_[3]);
  }

  template <typename To>
  BasicTensor<To> cast() const {
    return BasicTensor<To>(shape_, data_.template cast<To>().eval());
  }

 private:
  static Storage from_list(std::initializer_list<Scalar> values) {
    Storage s(static_cast<Index>(values.size()));
    Index i = 0;
    for (Scalar v : values) s[i++] = v;
    return s;
  }

  void cache_dims() { dims_ = shape_.nchw(); }

  Shape shape_;
  std::array<Index, 4> dims_{1, 1, 1, 1};
  Storage data_;
};

using Tensor = BasicTensor<double>;

// True iff any element is NaN or +-inf. Non-finite values are legal tensor
// contents; the training-stability experiment relies on detecting them.
template <typename Scalar>
bool has_nonfinite(const BasicTensor<Scalar>& t) {
  return !t.data().isFinite().all();
}

// Bitwise-aware equality: same shape and same element bits (NaN == NaN).
bool bit_equal(const Tensor& a, const Tensor& b);

}  // namespace smpool
