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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "latentwire/gbdt.hpp"

namespace latentwire::eval {

using Index = Eigen::Index;

struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
};

// Ratios of a confusion matrix. An undefined ratio (zero denominator) is
// reported as 1.0 for precision, 0.0 otherwise, with its flag set.
struct Metrics {
  ConfusionMatrix counts;
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double specificity = 0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool specificity_undefined = false;
};

Metrics metrics_from(const ConfusionMatrix& cm);

// score >= threshold predicts positive. Throws on empty or mismatched input
// and on labels outside {0, 1}.
Metrics confusion(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

enum class CurveKind { PR, ROC };

struct CurvePoint {
  double x = 0;
  double y = 0;
};

// PR: x = recall, y = precision, one point per distinct score (descending
// threshold), area = average precision. ROC: x = FPR, y = TPR starting at
// (0, 0), area by trapezoids.
struct Curve {
  CurveKind kind = CurveKind::ROC;
  std::vector<CurvePoint> points;
  double area = 0;
};

Curve pr_curve(std::span<const double> scores, std::span<const int> labels);
Curve roc_curve(std::span<const double> scores, std::span<const int> labels);

struct Fold {
  std::vector<Index> train;  // ascending
  std::vector<Index> test;   // ascending
};

// Shuffled with the seed, then dealt round-robin (class by class when
// stratified, the positive deal continuing where the negative one stopped).
// Stratified requires every class count >= k.
std::vector<Fold> kfold(std::span<const int> labels, int k, std::uint64_t seed, bool stratified = true);

// Folds over whole groups (e.g. seizure events): no group is split across a
// train/test boundary. Groups are shuffled with the seed and placed one at a
// time, those with more positives first, into the fold with the fewest
// positives so far. Requires at least k groups containing positives.
std::vector<Fold> group_kfold(std::span<const int> labels, std::span<const int> groups, int k, std::uint64_t seed);

// Stratified subset of `rows` holding out about `fraction` of each class
// (at least one sample of a class with two or more, never all of it).
std::pair<std::vector<Index>, std::vector<Index>> stratified_holdout(std::span<const Index> rows,
                                                                     std::span<const int> labels, double fraction,
                                                                     std::uint64_t seed);

struct FoldResult {
  int fold = 0;
  Metrics metrics;
  int best_round = 0;
  int trees = 0;
};

struct PipelineResult {
  std::vector<FoldResult> folds;
  double accuracy_mean = 0;
  double accuracy_std = 0;  // population
  Metrics pooled;
  Curve pr;
  Curve roc;
  // Out-of-fold scores in sample order.
  std::vector<double> scores;
};

struct PipelineOptions {
  gbdt::GbdtParams gbdt;
  double early_stopping_fraction = 0.1;
  std::uint64_t seed = 0;
  double threshold = 0.5;
};

// Trains one classifier per fold (holding out a stratified slice of the
// training rows for early stopping), scores the test rows and aggregates.
// Folds run in index order, so the result is a pure function of its inputs.
PipelineResult evaluate_pipeline(const gbdt::FeatureMatrix& features, std::span<const int> labels,
                                 const std::vector<Fold>& folds, const PipelineOptions& options);

// Structured text report: "key: value" lines, then CSV sections introduced
// by "[name]" lines, each with a header row.
struct Report {
  struct Section {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
  };
  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<Section> sections;

  void set(std::string key, std::string value);
  const std::string* get(const std::string& key) const;
  const Section* section(const std::string& name) const;
};

std::string format_double(double v);
std::string write_report(const Report& report);
Report parse_report(std::string_view text);
void save_report(const Report& report, const std::filesystem::path& path);
Report load_report(const std::filesystem::path& path);

// Fields and sections for a pipeline result (metrics, per-fold table, curves).
void append_result(Report& report, const PipelineResult& result);
void append_curve(Report& report, const std::string& name, const Curve& curve);

}  // namespace latentwire::eval
