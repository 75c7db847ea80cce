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


#include "latentwire/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latentwire/error.hpp"

namespace latentwire::gbdt {

void GbdtParams::validate() const {
  // eta = 0 is accepted: it freezes predictions at the base margin.
  if (!(eta >= 0 && eta <= 1)) throw ValidationError("gbdt: eta must be in [0, 1]");
  if (max_depth < 1) throw ValidationError("gbdt: max_depth must be >= 1");
  if (n_estimators < 1 || early_stopping_rounds < 1) {
    throw ValidationError("gbdt: n_estimators and early_stopping_rounds must be >= 1");
  }
  if (reg_lambda < 0 || reg_alpha < 0 || min_child_weight < 0) {
    throw ValidationError("gbdt: regularisation terms must be >= 0");
  }
  if (scale_pos_weight && !(*scale_pos_weight > 0)) throw ValidationError("gbdt: scale_pos_weight must be > 0");
}

double sigmoid(double m) {
  if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

GradHess logistic_grad_hess(double margin, int label, double pos_weight) {
  const double p = sigmoid(margin);
  const double w = label == 1 ? pos_weight : 1.0;
  return {w * (p - label), w * p * (1.0 - p)};
}

namespace {

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

struct NodeTotals {
  double grad = 0;
  double hess = 0;
};

// Column-sorted view of the training rows.
struct SortedColumns {
  std::vector<std::vector<Index>> rows;     // per feature, row ids by ascending value
  std::vector<std::vector<double>> values;  // matching values
};

SortedColumns sort_columns(const FeatureMatrix& x, std::span<const Index> rows) {
  SortedColumns s;
  const Index d = x.cols();
  s.rows.resize(static_cast<std::size_t>(d));
  s.values.resize(static_cast<std::size_t>(d));
  for (Index f = 0; f < d; ++f) {
    auto& r = s.rows[static_cast<std::size_t>(f)];
    r.assign(rows.begin(), rows.end());
    std::stable_sort(r.begin(), r.end(), [&](Index a, Index b) { return x(a, f) < x(b, f); });
    auto& v = s.values[static_cast<std::size_t>(f)];
    v.resize(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) v[k] = x(r[k], f);
  }
  return s;
}

// One pass over every feature evaluating all candidate splits for every
// active node simultaneously. slot_of[row] is the active node index of a row
// or -1 when the row sits in a finished leaf.
void scan_splits(const SortedColumns& cols, std::span<const int> slot_of, std::span<const double> g,
                 std::span<const double> h, const std::vector<NodeTotals>& totals, const GbdtParams& params,
                 std::vector<std::optional<Split>>& best) {
  const std::size_t slots = totals.size();
  best.assign(slots, std::nullopt);
  std::vector<double> parent(slots);
  for (std::size_t s = 0; s < slots; ++s) parent[s] = split_score(totals[s].grad, totals[s].hess, params);

  std::vector<double> gl(slots), hl(slots), last(slots);
  std::vector<char> seen(slots);
  for (std::size_t f = 0; f < cols.rows.size(); ++f) {
    std::fill(gl.begin(), gl.end(), 0.0);
    std::fill(hl.begin(), hl.end(), 0.0);
    std::fill(seen.begin(), seen.end(), 0);
    const auto& rows = cols.rows[f];
    const auto& values = cols.values[f];
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const Index i = rows[k];
      const int slot = slot_of[static_cast<std::size_t>(i)];
      if (slot < 0) continue;
      const auto s = static_cast<std::size_t>(slot);
      const double v = values[k];
      if (seen[s] && v != last[s]) {
        const double gr = totals[s].grad - gl[s];
        const double hr = totals[s].hess - hl[s];
        if (hl[s] >= params.min_child_weight && hr >= params.min_child_weight) {
          const double gain =
              0.5 * (split_score(gl[s], hl[s], params) + split_score(gr, hr, params) - parent[s]);
          if (gain > params.min_split_gain && (!best[s] || gain > best[s]->gain)) {
            best[s] = Split{static_cast<int>(f), (last[s] + v) / 2.0, gain, last[s], v};
          }
        }
      }
      gl[s] += g[static_cast<std::size_t>(i)];
      hl[s] += h[static_cast<std::size_t>(i)];
      last[s] = v;
      seen[s] = 1;
    }
  }
}

Tree build_tree(const FeatureMatrix& x, const SortedColumns& cols, std::span<const Index> train_rows,
                std::span<const double> g, std::span<const double> h, const GbdtParams& params) {
  Tree tree;
  tree.nodes.emplace_back();
  std::vector<int> slot_of(static_cast<std::size_t>(x.rows()), -1);
  for (Index i : train_rows) slot_of[static_cast<std::size_t>(i)] = 0;
  std::vector<int> active{0};  // node ids, indexed by slot

  for (int depth = 0; !active.empty(); ++depth) {
    std::vector<NodeTotals> totals(active.size());
    for (Index i : train_rows) {
      const int s = slot_of[static_cast<std::size_t>(i)];
      if (s < 0) continue;
      totals[static_cast<std::size_t>(s)].grad += g[static_cast<std::size_t>(i)];
      totals[static_cast<std::size_t>(s)].hess += h[static_cast<std::size_t>(i)];
    }
    std::vector<std::optional<Split>> best(active.size());
    if (depth < params.max_depth) scan_splits(cols, slot_of, g, h, totals, params, best);

    std::vector<int> next_active;
    std::vector<int> left_slot(active.size(), -1);
    for (std::size_t s = 0; s < active.size(); ++s) {
      const int id = active[s];
      if (!best[s]) {
        tree.nodes[static_cast<std::size_t>(id)].weight = leaf_weight(totals[s].grad, totals[s].hess, params);
        continue;
      }
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[static_cast<std::size_t>(id)];
      node.feature = best[s]->feature;
      node.threshold = best[s]->threshold;
      node.left = l;
      node.right = l + 1;
      left_slot[s] = static_cast<int>(next_active.size());
      next_active.push_back(l);
      next_active.push_back(l + 1);
    }
    for (Index i : train_rows) {
      int& s = slot_of[static_cast<std::size_t>(i)];
      if (s < 0) continue;
      const int ls = left_slot[static_cast<std::size_t>(s)];
      if (ls < 0) {
        s = -1;
        continue;
      }
      const auto& node = tree.nodes[static_cast<std::size_t>(active[static_cast<std::size_t>(s)])];
      s = x(i, node.feature) < node.threshold ? ls : ls + 1;
    }
    active = std::move(next_active);
  }
  return tree;
}

}  // namespace

double split_score(double grad_sum, double hess_sum, const GbdtParams& params) {
  const double t = soft_threshold(grad_sum, params.reg_alpha);
  return t * t / (hess_sum + params.reg_lambda);
}

double leaf_weight(double grad_sum, double hess_sum, const GbdtParams& params) {
  const double denom = hess_sum + params.reg_lambda;
  if (denom <= 0) return 0.0;
  return -soft_threshold(grad_sum, params.reg_alpha) / denom;
}

std::optional<Split> best_split(const FeatureMatrix& x, std::span<const double> g, std::span<const double> h,
                                std::span<const Index> rows, const GbdtParams& params) {
  if (rows.empty()) return std::nullopt;
  const SortedColumns cols = sort_columns(x, rows);
  std::vector<int> slot_of(static_cast<std::size_t>(x.rows()), -1);
  std::vector<NodeTotals> totals(1);
  for (Index i : rows) {
    slot_of[static_cast<std::size_t>(i)] = 0;
    totals[0].grad += g[static_cast<std::size_t>(i)];
    totals[0].hess += h[static_cast<std::size_t>(i)];
  }
  std::vector<std::optional<Split>> best;
  scan_splits(cols, slot_of, g, h, totals, params, best);
  return best[0];
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

double GbdtModel::margin(std::span<const double> row) const {
  if (static_cast<int>(row.size()) != feature_count) {
    throw ShapeError("gbdt: row has " + std::to_string(row.size()) + " features, model expects " +
                     std::to_string(feature_count));
  }
  double sum = 0;
  for (const auto& t : trees) sum += t.predict(row);
  return base_margin + params.eta * sum;
}

double weighted_log_loss(std::span<const double> margins, std::span<const int> y, double pos_weight) {
  double loss = 0, weight = 0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const double w = y[i] == 1 ? pos_weight : 1.0;
    // -log sigmoid(m) = log1p(exp(-m)), written to avoid overflow.
    const double m = y[i] == 1 ? margins[i] : -margins[i];
    const double l = m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
    loss += w * l;
    weight += w;
  }
  return weight > 0 ? loss / weight : 0.0;
}

GbdtModel fit(const FeatureMatrix& x, std::span<const int> y, const GbdtParams& params, const FeatureMatrix* x_val,
              std::span<const int> y_val) {
  params.validate();
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ShapeError("gbdt fit: " + std::to_string(x.rows()) + " rows but " + std::to_string(y.size()) + " labels");
  }
  if (x_val && (static_cast<std::size_t>(x_val->rows()) != y_val.size() || x_val->cols() != x.cols())) {
    throw ShapeError("gbdt fit: validation set shape does not match training set");
  }
  std::size_t pos = 0;
  for (int label : y) {
    if (label != 0 && label != 1) throw ValidationError("gbdt fit: labels must be 0 or 1");
    pos += label == 1;
  }
  const std::size_t neg = y.size() - pos;
  if (pos == 0 || neg == 0) throw ValidationError("gbdt fit: training set needs both classes");

  GbdtModel model;
  model.params = params;
  model.feature_count = static_cast<int>(x.cols());
  model.pos_weight = params.scale_pos_weight.value_or(static_cast<double>(neg) / static_cast<double>(pos));

  std::vector<Index> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  const SortedColumns cols = sort_columns(x, rows);

  std::vector<double> margin(rows.size(), model.base_margin);
  std::vector<double> val_margin(x_val ? static_cast<std::size_t>(x_val->rows()) : 0, model.base_margin);
  std::vector<double> g(rows.size()), h(rows.size());

  for (int round = 1; round <= params.n_estimators; ++round) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto gh = logistic_grad_hess(margin[i], y[i], model.pos_weight);
      g[i] = gh.g;
      h[i] = gh.h;
    }
    Tree tree = build_tree(x, cols, rows, g, h, params);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      margin[i] += params.eta * tree.predict(x.row(static_cast<Index>(i)));
    }
    model.trees.push_back(std::move(tree));
    model.best_round = round;
    if (!x_val) continue;

    for (std::size_t i = 0; i < val_margin.size(); ++i) {
      val_margin[i] += params.eta * model.trees.back().predict(x_val->row(static_cast<Index>(i)));
    }
    const double loss = weighted_log_loss(val_margin, y_val, model.pos_weight);
    model.validation_loss.push_back(loss);
    const int best_so_far = static_cast<int>(std::min_element(model.validation_loss.begin(), model.validation_loss.end()) -
                                             model.validation_loss.begin()) + 1;
    if (round - best_so_far >= params.early_stopping_rounds) break;
  }
  if (x_val && !model.validation_loss.empty()) {
    model.best_round = static_cast<int>(std::min_element(model.validation_loss.begin(), model.validation_loss.end()) -
                                        model.validation_loss.begin()) + 1;
    model.trees.resize(static_cast<std::size_t>(model.best_round));
  }
  return model;
}

double predict_proba(const GbdtModel& model, std::span<const double> row) { return sigmoid(model.margin(row)); }

Eigen::VectorXd predict_proba(const GbdtModel& model, const FeatureMatrix& x) {
  if (x.cols() != model.feature_count) {
    throw ShapeError("gbdt: matrix has " + std::to_string(x.cols()) + " features, model expects " +
                     std::to_string(model.feature_count));
  }
  Eigen::VectorXd out(x.rows());
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index f = 0; f < x.cols(); ++f) row[static_cast<std::size_t>(f)] = x(i, f);
    out[i] = predict_proba(model, row);
  }
  return out;
}

}  // namespace latentwire::gbdt
