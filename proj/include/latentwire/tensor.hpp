// Copyright 2026 The LatentWire Authors. All Rights Reserved.
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
#include <numeric>
#include <string>
#include <vector>

#include "latentwire/error.hpp"

namespace latentwire::ad {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline Index numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Dense n-d array, row-major (last dimension fastest).
template <typename Scalar>
struct Tensor {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Shape shape;
  Array values;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), values(Array::Zero(numel(shape))) {}
  Tensor(Shape s, Array v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != numel(shape)) {
      throw ShapeError("tensor: " + std::to_string(values.size()) + " values do not fill shape " +
                       shape_string(shape));
    }
  }

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor constant(Shape s, Scalar v) {
    Tensor t(std::move(s));
    t.values.setConstant(v);
    return t;
  }
  static Tensor scalar(Scalar v) { return constant({}, v); }

  Index size() const { return values.size(); }
  Index rank() const { return static_cast<Index>(shape.size()); }
  Index dim(std::size_t i) const { return shape.at(i); }
  Scalar* data() { return values.data(); }
  const Scalar* data() const { return values.data(); }
  Scalar item() const {
    if (values.size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape));
    return values[0];
  }

  template <typename T>
  Tensor<T> cast() const {
    return Tensor<T>(shape, values.template cast<T>());
  }
};

// A named, optionally trainable array with an accumulated gradient. Buffers
// such as batch-norm running statistics are non-trainable parameters.
template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  typename Tensor<Scalar>::Array grad;
  bool trainable = true;

  void zero_grad() { grad = Tensor<Scalar>::Array::Zero(value.size()); }
};

}  // namespace latentwire::ad
