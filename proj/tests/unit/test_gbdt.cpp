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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "latentwire/error.hpp"
#include "latentwire/gbdt.hpp"
#include "oracles.hpp"

namespace lw = latentwire;
namespace gbdt = latentwire::gbdt;
using gbdt::Index;

namespace {

using latentwire::testing::blobs;

std::vector<Index> all_rows(Index n) {
  std::vector<Index> r(static_cast<std::size_t>(n));
  std::iota(r.begin(), r.end(), 0);
  return r;
}

// Independent recursive tree walk.
double walk(const gbdt::Tree& t, int node, std::span<const double> row) {
  const auto& n = t.nodes[static_cast<std::size_t>(node)];
  if (n.feature < 0) return n.weight;
  return walk(t, row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right, row);
}

}  // namespace

TEST(GradHess, Examples) {
  auto a = gbdt::logistic_grad_hess(0, 1, 1);
  EXPECT_DOUBLE_EQ(a.g, -0.5);
  EXPECT_DOUBLE_EQ(a.h, 0.25);
  auto b = gbdt::logistic_grad_hess(0, 0, 1);
  EXPECT_DOUBLE_EQ(b.g, 0.5);
  EXPECT_DOUBLE_EQ(b.h, 0.25);
  // sigma(2) = 0.8807970779778823
  auto c = gbdt::logistic_grad_hess(2, 1, 3);
  EXPECT_NEAR(c.g, -0.35760876606635306, 1e-12);
  EXPECT_NEAR(c.h, 0.31498075621051985, 1e-12);
}

TEST(GradHess, BalancedGradientSumIsZero) {
  for (int pos : {1, 3, 14}) {
    const int neg = 86;
    const double w = static_cast<double>(neg) / pos;
    double sum = 0;
    for (int i = 0; i < pos; ++i) sum += gbdt::logistic_grad_hess(0, 1, w).g;
    for (int i = 0; i < neg; ++i) sum += gbdt::logistic_grad_hess(0, 0, w).g;
    EXPECT_NEAR(sum, 0.0, 1e-12);
  }
}

TEST(Leaf, LambdaShrinksWeight) {
  gbdt::GbdtParams p;
  double prev = std::abs(gbdt::leaf_weight(-3.0, 2.0, p));
  for (double lambda : {1.5, 2.0, 5.0, 50.0}) {
    p.reg_lambda = lambda;
    const double w = std::abs(gbdt::leaf_weight(-3.0, 2.0, p));
    EXPECT_LE(w, prev);
    prev = w;
  }
  p.reg_lambda = 1;
  p.reg_alpha = 5;
  EXPECT_EQ(gbdt::leaf_weight(-3.0, 2.0, p), 0.0);
}

TEST(BestSplit, OneDimensionalExample) {
  gbdt::FeatureMatrix x(4, 1);
  x << 1, 2, 3, 4;
  std::vector<double> g, h;
  for (int y : {0, 0, 1, 1}) {
    const auto gh = gbdt::logistic_grad_hess(0, y, 1);
    g.push_back(gh.g);
    h.push_back(gh.h);
  }
  gbdt::GbdtParams p;
  p.min_child_weight = 0;  // each child holds hessian 0.5
  const auto rows = all_rows(4);
  const auto s = gbdt::best_split(x, g, h, rows, p);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->feature, 0);
  EXPECT_EQ(s->threshold, 2.5);
  EXPECT_EQ(s->lower, 2);
  EXPECT_EQ(s->upper, 3);
}

TEST(BestSplit, PureNodeAndConstantFeature) {
  gbdt::FeatureMatrix x(4, 2);
  x << 1, 7, 2, 7, 3, 7, 4, 7;
  std::vector<double> g(4, 0.5), h(4, 0.25);
  gbdt::GbdtParams p;
  p.min_child_weight = 0;
  const auto rows = all_rows(4);
  EXPECT_FALSE(gbdt::best_split(x, g, h, rows, p));  // pure
  g = {0.5, -0.5, 0.5, -0.5};
  gbdt::FeatureMatrix c = gbdt::FeatureMatrix::Constant(4, 1, 3.0);
  EXPECT_FALSE(gbdt::best_split(c, g, h, rows, p));
  const auto s = gbdt::best_split(x, g, h, rows, p);
  if (s) {
    EXPECT_EQ(s->feature, 0);
  }
}

TEST(BestSplit, MatchesBruteForceOn200Datasets) {
  std::mt19937_64 rng(2024);
  int with_split = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto problem = latentwire::testing::random_split_problem(rng, trial);
    EXPECT_EQ(latentwire::testing::check_split(problem), "") << "trial " << trial;
    const auto rows = all_rows(problem.x.rows());
    with_split += gbdt::best_split(problem.x, problem.g, problem.h, rows, problem.params).has_value();
  }
  EXPECT_GT(with_split, 100);
}

TEST(Fit, SeparableBlobsWithin50Rounds) {
  gbdt::FeatureMatrix x;
  std::vector<int> y;
  blobs(120, 2, 5, x, y);
  gbdt::GbdtParams p;
  p.n_estimators = 50;
  const auto m = gbdt::fit(x, y, p);
  EXPECT_LE(m.trees.size(), 50u);
  const auto prob = gbdt::predict_proba(m, x);
  for (Index i = 0; i < x.rows(); ++i) EXPECT_EQ(prob[i] >= 0.5 ? 1 : 0, y[static_cast<std::size_t>(i)]);
}

TEST(Fit, ZeroEtaStaysAtHalf) {
  gbdt::FeatureMatrix x;
  std::vector<int> y;
  blobs(30, 2, 6, x, y);
  gbdt::GbdtParams p;
  p.eta = 0;
  p.n_estimators = 5;
  const auto m = gbdt::fit(x, y, p);
  const auto prob = gbdt::predict_proba(m, x);
  for (Index i = 0; i < x.rows(); ++i) EXPECT_EQ(prob[i], 0.5);
}

TEST(Fit, EmptyModelPredictsHalf) {
  gbdt::GbdtModel m;
  m.feature_count = 3;
  const std::vector<double> row{1, 2, 3};
  EXPECT_EQ(gbdt::predict_proba(m, row), 0.5);
  EXPECT_THROW(gbdt::predict_proba(m, std::vector<double>{1, 2}), lw::ShapeError);
}

TEST(Fit, DeterministicAndMatchesTreeWalk) {
  gbdt::FeatureMatrix x;
  std::vector<int> y;
  blobs(80, 3, 7, x, y);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0, 2);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] += noise(rng);
  gbdt::GbdtParams p;
  p.n_estimators = 40;
  p.eta = 0.3;
  p.max_depth = 3;
  const auto a = gbdt::fit(x, y, p);
  const auto b = gbdt::fit(x, y, p);
  ASSERT_EQ(a.trees.size(), b.trees.size());
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    ASSERT_EQ(a.trees[t].nodes.size(), b.trees[t].nodes.size());
    for (std::size_t k = 0; k < a.trees[t].nodes.size(); ++k) {
      EXPECT_EQ(a.trees[t].nodes[k].feature, b.trees[t].nodes[k].feature);
      EXPECT_EQ(a.trees[t].nodes[k].threshold, b.trees[t].nodes[k].threshold);
      EXPECT_EQ(a.trees[t].nodes[k].weight, b.trees[t].nodes[k].weight);
    }
    EXPECT_LE(a.trees[t].depth(), 3);
  }
  std::uniform_real_distribution<double> u(-6, 6);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> row{u(rng), u(rng), u(rng)};
    double margin = a.base_margin;
    for (const auto& t : a.trees) margin += a.params.eta * walk(t, 0, row);
    const double want = 1 / (1 + std::exp(-margin));
    const double got = gbdt::predict_proba(a, row);
    EXPECT_NEAR(got, want, 1e-15);
    EXPECT_GT(got, 0);
    EXPECT_LT(got, 1);
  }
}

TEST(Fit, EarlyStoppingKeepsBestRound) {
  gbdt::FeatureMatrix x, xv;
  std::vector<int> y, yv;
  blobs(60, 2, 8, x, y);
  blobs(30, 2, 9, xv, yv);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0, 4);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] += noise(rng);
  for (Index i = 0; i < xv.size(); ++i) xv.data()[i] += noise(rng);
  gbdt::GbdtParams p;
  p.n_estimators = 300;
  p.eta = 0.3;
  p.early_stopping_rounds = 10;
  const auto m = gbdt::fit(x, y, p, &xv, yv);
  ASSERT_FALSE(m.validation_loss.empty());
  ASSERT_GE(m.best_round, 1);
  EXPECT_EQ(m.trees.size(), static_cast<std::size_t>(m.best_round));
  const double best = m.validation_loss[static_cast<std::size_t>(m.best_round - 1)];
  for (int r = 0; r < m.best_round; ++r) EXPECT_LE(best, m.validation_loss[static_cast<std::size_t>(r)]);
  EXPECT_LE(m.validation_loss.size(), static_cast<std::size_t>(m.best_round + p.early_stopping_rounds));
}

TEST(Fit, SingleClassErrors) {
  gbdt::FeatureMatrix x = gbdt::FeatureMatrix::Zero(4, 1);
  std::vector<int> y(4, 1);
  EXPECT_THROW(gbdt::fit(x, y, {}), lw::ValidationError);
}

TEST(Fit, DefaultPosWeightIsClassRatio) {
  gbdt::FeatureMatrix x;
  std::vector<int> y;
  blobs(30, 1, 1, x, y);  // 10 positive, 20 negative
  gbdt::GbdtParams p;
  p.n_estimators = 1;
  EXPECT_DOUBLE_EQ(gbdt::fit(x, y, p).pos_weight, 2.0);
  p.scale_pos_weight = 0.5;
  EXPECT_DOUBLE_EQ(gbdt::fit(x, y, p).pos_weight, 0.5);
}

TEST(Params, Validation) {
  gbdt::GbdtParams p;
  p.eta = 1.5;
  EXPECT_THROW(p.validate(), lw::ValidationError);
  p = {};
  p.max_depth = 0;
  EXPECT_THROW(p.validate(), lw::ValidationError);
  p = {};
  p.scale_pos_weight = -1;
  EXPECT_THROW(p.validate(), lw::ValidationError);
}
