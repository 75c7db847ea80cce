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


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "latentwire/adam.hpp"
#include "latentwire/autodiff.hpp"
#include "op_registry.hpp"

namespace lw = latentwire;
using lw::ad::Parameter;
using lw::ad::Tape;
using lw::ad::Tensor;

TEST(Autodiff, SquareGradientAtThree) {
  Parameter<double> x{"x", Tensor<double>::scalar(3.0), {}, true};
  Tape<double> tape;
  auto v = tape.param(x);
  tape.backward(v * v);
  EXPECT_DOUBLE_EQ(x.grad[0], 6.0);
}

TEST(Autodiff, BilinearGradientIsOtherOperand) {
  std::mt19937_64 rng(5);
  Parameter<double> a{"a", lw::testing::random_tensor({3, 4}, rng), {}, true};
  const auto b = lw::testing::random_tensor({3, 4}, rng);
  Tape<double> tape;
  tape.backward(lw::ad::sum(tape.param(a) * tape.constant(b)));
  for (Eigen::Index i = 0; i < b.size(); ++i) EXPECT_DOUBLE_EQ(a.grad[i], b.values[i]);
}

TEST(Autodiff, FanInAccumulates) {
  Parameter<double> x{"x", Tensor<double>::scalar(2.0), {}, true};
  Tape<double> tape;
  auto v = tape.param(x);
  tape.backward(v + v + v);
  EXPECT_DOUBLE_EQ(x.grad[0], 3.0);
}

TEST(Autodiff, SecondBackwardErrors) {
  Parameter<double> x{"x", Tensor<double>::scalar(1.0), {}, true};
  Tape<double> tape;
  auto loss = lw::ad::sum(tape.param(x));
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), lw::TapeError);
}

TEST(Autodiff, NonScalarLossErrors) {
  Tape<double> tape;
  Parameter<double> x{"x", Tensor<double>({2}), {}, true};
  EXPECT_THROW(tape.backward(tape.param(x)), lw::TapeError);
}

TEST(Autodiff, ShapeMismatchNamesOpAndShapes) {
  Tape<double> tape;
  auto a = tape.constant(Tensor<double>({2, 3}));
  auto b = tape.constant(Tensor<double>({3, 2}));
  try {
    lw::ad::add(a, b);
    FAIL();
  } catch (const lw::ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("add"), std::string::npos);
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos);
    EXPECT_NE(msg.find("[3, 2]"), std::string::npos);
  }
  EXPECT_THROW(lw::ad::matmul(a, a), lw::ShapeError);
}

TEST(Autodiff, ReluElementwise) {
  Tape<double> tape(false);
  Tensor<double> x({4}, (Eigen::ArrayXd(4) << -2, -0.5, 0, 1.5).finished());
  auto y = lw::ad::relu(tape.constant(x)).value();
  EXPECT_EQ(y.values[0], 0);
  EXPECT_EQ(y.values[1], 0);
  EXPECT_EQ(y.values[2], 0);
  EXPECT_EQ(y.values[3], 1.5);
}

TEST(Autodiff, UnitKernelConvIsIdentity) {
  std::mt19937_64 rng(1);
  const auto x = lw::testing::random_tensor({2, 1, 5, 7}, rng);
  Tape<double> tape(false);
  auto y = lw::ad::conv2d(tape.constant(x), tape.constant(Tensor<double>::constant({1, 1, 1, 1}, 1.0)),
                          tape.constant(Tensor<double>({1})), 1, 0);
  EXPECT_EQ(y.shape(), x.shape);
  EXPECT_TRUE((y.value().values == x.values).all());
}

TEST(Autodiff, StridedConvShapeRoundTrip) {
  for (Eigen::Index h : {2, 4, 8, 16, 32, 128})
    for (Eigen::Index w : {2, 6, 16, 32}) {
      Tape<double> tape(false);
      auto x = tape.constant(Tensor<double>({1, 2, h, w}));
      auto down = lw::ad::conv2d(x, tape.constant(Tensor<double>({3, 2, 4, 4})), tape.constant(Tensor<double>({3})), 2, 1);
      EXPECT_EQ(down.shape(), (lw::ad::Shape{1, 3, h / 2, w / 2}));
      auto up = lw::ad::conv2d_transpose(down, tape.constant(Tensor<double>({3, 2, 4, 4})),
                                         tape.constant(Tensor<double>({2})), 2, 1);
      EXPECT_EQ(up.shape(), x.shape());
    }
}

// conv2d_transpose is the adjoint of conv2d: <conv(x), y> = <x, convT(y)>.
TEST(Autodiff, TransposeIsAdjoint) {
  std::mt19937_64 rng(9);
  const auto x = lw::testing::random_tensor({1, 2, 6, 6}, rng);
  const auto w = lw::testing::random_tensor({3, 2, 4, 4}, rng);
  const auto y = lw::testing::random_tensor({1, 3, 3, 3}, rng);
  Tape<double> tape(false);
  auto cx = lw::ad::conv2d(tape.constant(x), tape.constant(w), tape.constant(Tensor<double>({3})), 2, 1);
  auto ty = lw::ad::conv2d_transpose(tape.constant(y), tape.constant(w), tape.constant(Tensor<double>({2})), 2, 1);
  EXPECT_NEAR((cx.value().values * y.values).sum(), (x.values * ty.value().values).sum(), 1e-12);
}

TEST(Autodiff, BatchNormInferenceIsAffine) {
  std::mt19937_64 rng(2);
  auto mean = lw::testing::random_tensor({3}, rng);
  auto var = lw::testing::random_tensor({3}, rng, 0.5, 2.0);
  const auto gamma = lw::testing::random_tensor({3}, rng);
  const auto beta = lw::testing::random_tensor({3}, rng);
  const auto x = lw::testing::random_tensor({2, 3, 2, 2}, rng);
  lw::ad::BatchNormOptions<double> opt;
  opt.training = false;
  Tape<double> tape(false);
  auto y = lw::ad::batch_norm(tape.constant(x), tape.constant(gamma), tape.constant(beta), mean, var, opt).value();
  for (Eigen::Index n = 0; n < 2; ++n)
    for (Eigen::Index c = 0; c < 3; ++c)
      for (Eigen::Index k = 0; k < 4; ++k) {
        const auto i = (n * 3 + c) * 4 + k;
        const double want = (x.values[i] - mean.values[c]) / std::sqrt(var.values[c] + opt.eps) * gamma.values[c] +
                            beta.values[c];
        EXPECT_NEAR(y.values[i], want, 1e-12);
      }
}

TEST(Autodiff, BatchNormUpdatesRunningStats) {
  Tensor<double> x({4, 1}, (Eigen::ArrayXd(4) << 1, 2, 3, 4).finished());
  auto mean = Tensor<double>::zeros({1});
  auto var = Tensor<double>::constant({1}, 1.0);
  Tape<double> tape(false);
  lw::ad::batch_norm(tape.constant(x), tape.constant(Tensor<double>::constant({1}, 1.0)),
                     tape.constant(Tensor<double>({1})), mean, var, lw::ad::BatchNormOptions<double>{});
  EXPECT_NEAR(mean.values[0], 0.1 * 2.5, 1e-12);
  EXPECT_NEAR(var.values[0], 0.9 + 0.1 * (5.0 / 3.0), 1e-12);
}

class OperatorGradient : public ::testing::TestWithParam<std::string> {};

TEST_P(OperatorGradient, MatchesFiniteDifferences) {
  for (const auto& op : lw::testing::op_registry()) {
    if (op.name != GetParam()) continue;
    for (int v = 0; v < lw::testing::kShapeVariants; ++v) {
      std::mt19937_64 rng(100 + v);
      auto [fn, inputs] = op.make(v, rng);
      const auto r = lw::testing::gradcheck(fn, inputs, 7 + v);
      EXPECT_LT(r.rel_error, 1e-5) << op.name << " variant " << v;
    }
    return;
  }
  FAIL() << "unknown op " << GetParam();
}

INSTANTIATE_TEST_SUITE_P(AllOps, OperatorGradient, ::testing::ValuesIn([] {
                           std::vector<std::string> names;
                           for (const auto& op : lw::testing::op_registry()) names.push_back(op.name);
                           return names;
                         }()));

TEST(Adam, FirstStepIsLrTimesSign) {
  using Array = Tensor<double>::Array;
  Array w = (Array(4) << 1, -2, 0.5, 3).finished();
  const Array g = (Array(4) << 0.3, -5, 1e-3, -0.01).finished();
  const Array w0 = w;
  lw::ad::AdamState<double> s;
  s.lr = 0.01;
  Array* values[] = {&w};
  const Array* grads[] = {&g};
  lw::ad::adam_step<double>(std::span<Array* const>(values), std::span<const Array* const>(grads), s);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double expect = s.lr * g[i] / (std::abs(g[i]) + s.eps);
    EXPECT_NEAR(w0[i] - w[i], expect, 1e-6 * s.lr);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  using Array = Tensor<double>::Array;
  Array w = (Array(3) << 1, 2, 3).finished();
  const Array w0 = w;
  const Array g = Array::Zero(3);
  lw::ad::AdamState<double> s;
  Array* values[] = {&w};
  const Array* grads[] = {&g};
  for (int i = 0; i < 50; ++i)
    lw::ad::adam_step<double>(std::span<Array* const>(values), std::span<const Array* const>(grads), s);
  EXPECT_TRUE((w == w0).all());
}

// Scalar reference Adam, written out per coordinate.
static void oracle_adam(std::vector<double>& w, int steps, double lr) {
  std::vector<double> m(w.size()), v(w.size());
  for (int t = 1; t <= steps; ++t)
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = 2 * w[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      w[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
}

TEST(Adam, QuadraticBowlMatchesOracle) {
  Parameter<double> w{"w", Tensor<double>({2}, (Eigen::ArrayXd(2) << 1, 1).finished()), {}, true};
  lw::ad::AdamState<double> s;
  s.lr = 0.01;
  for (int i = 0; i < 200; ++i) {
    w.zero_grad();
    Tape<double> tape;
    auto v = tape.param(w);
    tape.backward(lw::ad::sum(v * v));
    Parameter<double>* ps[] = {&w};
    lw::ad::adam_step<double>(std::span<Parameter<double>* const>(ps), s);
  }
  std::vector<double> ref{1, 1};
  oracle_adam(ref, 200, 0.01);
  EXPECT_NEAR(w.value.values[0], ref[0], 1e-12);
  EXPECT_NEAR(w.value.values[1], ref[1], 1e-12);
  EXPECT_LT(w.value.values.matrix().norm(), 0.5 * std::sqrt(2.0));
}

TEST(Adam, ShapeMismatchErrors) {
  using Array = Tensor<double>::Array;
  Array w = Array::Zero(3);
  const Array g = Array::Zero(2);
  lw::ad::AdamState<double> s;
  Array* values[] = {&w};
  const Array* grads[] = {&g};
  EXPECT_THROW(lw::ad::adam_step<double>(std::span<Array* const>(values), std::span<const Array* const>(grads), s),
               lw::ShapeError);
}
