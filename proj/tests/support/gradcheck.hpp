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

// Central finite differences against the tape, in double precision.

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "latentwire/autodiff.hpp"

namespace latentwire::testing {

using ad::Index;
using ad::Parameter;
using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

using Op = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

inline Tensor<double> random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(shape);
  for (auto& v : t.values) v = u(rng);
  return t;
}

// Values with |x| in [0.2, 1] so kinks at 0 stay out of reach of the step.
inline Tensor<double> away_from_zero(const Shape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::bernoulli_distribution sign(0.5);
  Tensor<double> t(shape);
  for (auto& v : t.values) v = sign(rng) ? u(rng) : -u(rng);
  return t;
}

struct GradCheck {
  double rel_error = 0;  // ||analytic - numeric|| / max(||numeric||, 1e-12)
  double max_abs = 0;
};

// loss = sum(op(inputs) * r) with a fixed random r, so every output element
// contributes a distinct weight. Step h = 1e-4 (1 + |x|).
inline GradCheck gradcheck(const Op& op, std::vector<Tensor<double>> inputs, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  Tensor<double> weights;
  bool have_weights = false;
  auto loss_of = [&](std::vector<Parameter<double>>& ps, bool record, bool backward) {
    Tape<double> tape(record);
    std::vector<Var<double>> vars;
    for (auto& p : ps) vars.push_back(tape.param(p));
    auto out = op(tape, vars);
    if (!have_weights) {
      weights = random_tensor(out.shape(), rng);
      have_weights = true;
    }
    auto loss = ad::sum(out * tape.constant(weights));
    if (backward) tape.backward(loss);
    return loss.value().item();
  };

  std::vector<Parameter<double>> params;
  for (std::size_t i = 0; i < inputs.size(); ++i) params.push_back({"in" + std::to_string(i), inputs[i], {}, true});
  for (auto& p : params) p.zero_grad();
  loss_of(params, true, true);

  Eigen::VectorXd analytic, numeric;
  std::vector<double> a, n;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (Eigen::Index k = 0; k < params[i].value.size(); ++k) {
      double& x = params[i].value.values[k];
      const double x0 = x;
      const double h = 1e-4 * (1 + std::abs(x0));
      x = x0 + h;
      const double up = loss_of(params, false, false);
      x = x0 - h;
      const double down = loss_of(params, false, false);
      x = x0;
      a.push_back(params[i].grad[k]);
      n.push_back((up - down) / (2 * h));
    }
  }
  analytic = Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
  numeric = Eigen::Map<Eigen::VectorXd>(n.data(), static_cast<Eigen::Index>(n.size()));
  GradCheck r;
  r.rel_error = (analytic - numeric).norm() / std::max(numeric.norm(), 1e-12);
  r.max_abs = (analytic - numeric).cwiseAbs().maxCoeff();
  return r;
}

}  // namespace latentwire::testing
