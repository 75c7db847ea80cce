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

// Gradient-boosted decision trees for binary classification with the
// second-order logistic objective: exact greedy splits scored by
//   gain = 1/2 [S(G_L, H_L) + S(G_R, H_R) - S(G, H)],  S(G, H) = T_a(G)^2 / (H + lambda)
// where T_a is L1 soft-thresholding, and leaf weights -T_a(G) / (H + lambda).

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace latentwire::gbdt {

using Index = Eigen::Index;
// One row per sample.
using FeatureMatrix = Eigen::MatrixXd;

struct GbdtParams {
  int n_estimators = 500;
  int max_depth = 6;
  double eta = 0.01;
  double reg_lambda = 1.0;
  double reg_alpha = 0.0;
  // Positive-class gradient weight; n_negative / n_positive when unset.
  std::optional<double> scale_pos_weight;
  int early_stopping_rounds = 50;
  double min_child_weight = 1.0;
  double min_split_gain = 1e-12;

  void validate() const;
};

struct GradHess {
  double g = 0;
  double h = 0;
};

double sigmoid(double margin);

// p = sigmoid(margin), w = pos_weight for label 1 else 1:
// g = w (p - label), h = w p (1 - p).
GradHess logistic_grad_hess(double margin, int label, double pos_weight);

// T_a(G)^2 / (H + lambda)
double split_score(double grad_sum, double hess_sum, const GbdtParams& params);
// -T_a(G) / (H + lambda)
double leaf_weight(double grad_sum, double hess_sum, const GbdtParams& params);

struct Split {
  int feature = -1;
  double threshold = 0;  // midpoint; rows with x < threshold go left
  double gain = 0;
  double lower = 0;      // largest left value
  double upper = 0;      // smallest right value
};

// Best admissible split of the given rows: every feature, every midpoint
// between consecutive distinct values. Admissible means gain >
// min_split_gain and both children carry hessian >= min_child_weight. Ties
// go to the lower feature index, then the lower threshold.
std::optional<Split> best_split(const FeatureMatrix& x, std::span<const double> g, std::span<const double> h,
                                std::span<const Index> rows, const GbdtParams& params);

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0;
  int left = -1;
  int right = -1;
  double weight = 0;  // leaf weight before the learning rate

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  template <typename Row>
  double predict(const Row& row) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = row[n.feature] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].weight;
  }
  int depth() const;
};

struct GbdtModel {
  std::vector<Tree> trees;
  double base_margin = 0;
  GbdtParams params;
  int feature_count = 0;
  double pos_weight = 1.0;
  // Weighted validation log-loss after each round (empty without a
  // validation set) and the round the model was truncated to (1-based).
  std::vector<double> validation_loss;
  int best_round = 0;

  double margin(std::span<const double> row) const;
};

// Boosts trees on (x, y). With a validation set, stops once the validation
// log-loss has not improved for early_stopping_rounds and truncates to the
// best round. Throws ValidationError for a single-class training set.
GbdtModel fit(const FeatureMatrix& x, std::span<const int> y, const GbdtParams& params,
              const FeatureMatrix* x_val = nullptr, std::span<const int> y_val = {});

double predict_proba(const GbdtModel& model, std::span<const double> row);
Eigen::VectorXd predict_proba(const GbdtModel& model, const FeatureMatrix& x);

// Weighted mean log-loss of margins against labels.
double weighted_log_loss(std::span<const double> margins, std::span<const int> y, double pos_weight);

}  // namespace latentwire::gbdt
