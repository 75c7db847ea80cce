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

#include <cmath>
#include <span>
#include <vector>

#include "latentwire/tensor.hpp"

namespace latentwire::ad {

template <typename Scalar>
struct AdamState {
  using Array = typename Tensor<Scalar>::Array;

  Scalar lr = Scalar(1e-4);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
  long step = 0;
  std::vector<Array> m;
  std::vector<Array> v;
};

// One bias-corrected Adam update of `values` from `grads`, pairwise. Moment
// buffers are created on the first call; later calls must present the same
// shapes.
template <typename Scalar>
void adam_step(std::span<typename Tensor<Scalar>::Array* const> values,
               std::span<const typename Tensor<Scalar>::Array* const> grads, AdamState<Scalar>& state) {
  using Array = typename Tensor<Scalar>::Array;
  if (values.size() != grads.size()) throw ShapeError("adam_step: parameter and gradient counts differ");
  if (state.m.empty()) {
    for (auto* p : values) {
      state.m.push_back(Array::Zero(p->size()));
      state.v.push_back(Array::Zero(p->size()));
    }
  }
  if (state.m.size() != values.size()) throw ShapeError("adam_step: parameter count changed between steps");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i]->size() != grads[i]->size() || state.m[i].size() != values[i]->size()) {
      throw ShapeError("adam_step: parameter " + std::to_string(i) + " has " + std::to_string(values[i]->size()) +
                       " values, gradient " + std::to_string(grads[i]->size()) + ", moments " +
                       std::to_string(state.m[i].size()));
    }
  }

  ++state.step;
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, static_cast<Scalar>(state.step));
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, static_cast<Scalar>(state.step));
  for (std::size_t i = 0; i < values.size(); ++i) {
    Array& m = state.m[i];
    Array& v = state.v[i];
    const Array& g = *grads[i];
    m = state.beta1 * m + (Scalar(1) - state.beta1) * g;
    v = state.beta2 * v + (Scalar(1) - state.beta2) * g.square();
    *values[i] -= state.lr * (m / c1) / ((v / c2).sqrt() + state.eps);
  }
}

// Steps every trainable parameter using its accumulated gradient.
template <typename Scalar>
void adam_step(std::span<Parameter<Scalar>* const> params, AdamState<Scalar>& state) {
  using Array = typename Tensor<Scalar>::Array;
  std::vector<Array*> values;
  std::vector<const Array*> grads;
  for (auto* p : params) {
    if (!p->trainable) continue;
    if (p->grad.size() != p->value.size()) p->zero_grad();
    values.push_back(&p->value.values);
    grads.push_back(&p->grad);
  }
  adam_step<Scalar>(std::span<Array* const>(values), std::span<const Array* const>(grads), state);
}

}  // namespace latentwire::ad
