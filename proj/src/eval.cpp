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


#include "latentwire/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "latentwire/binary_io.hpp"
#include "latentwire/error.hpp"

namespace latentwire::eval {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.empty()) throw ValidationError("no scores to evaluate");
  if (scores.size() != labels.size()) {
    throw ShapeError("scores (" + std::to_string(scores.size()) + ") and labels (" + std::to_string(labels.size()) +
                     ") differ in length");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("label " + std::to_string(i) + " is not 0 or 1");
    if (std::isnan(scores[i])) throw ValidationError("score " + std::to_string(i) + " is NaN");
  }
}

struct Step {
  std::int64_t tp;
  std::int64_t fp;
};

// Cumulative counts after admitting every sample with score >= each distinct
// score, highest first.
std::vector<Step> threshold_steps(std::span<const double> scores, std::span<const int> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  std::vector<Step> steps;
  Step cur{0, 0};
  for (std::size_t i = 0; i < order.size(); ++i) {
    (labels[order[i]] == 1 ? cur.tp : cur.fp) += 1;
    if (i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]]) steps.push_back(cur);
  }
  return steps;
}

std::vector<Index> shuffled(std::vector<Index> v, std::mt19937_64& rng) {
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

std::vector<Fold> folds_from_assignment(const std::vector<int>& fold_of, int k) {
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    for (int f = 0; f < k; ++f) {
      auto& dst = f == fold_of[i] ? folds[static_cast<std::size_t>(f)].test : folds[static_cast<std::size_t>(f)].train;
      dst.push_back(static_cast<Index>(i));
    }
  }
  return folds;
}

void check_labels(std::span<const int> labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("label " + std::to_string(i) + " is not 0 or 1");
  }
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

Metrics metrics_from(const ConfusionMatrix& cm) {
  Metrics m;
  m.counts = cm;
  m.accuracy = cm.total() ? static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total()) : 0.0;
  auto ratio = [](std::int64_t num, std::int64_t den, double sentinel, bool& undefined) {
    undefined = den == 0;
    return undefined ? sentinel : static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(cm.tp, cm.tp + cm.fp, 1.0, m.precision_undefined);
  m.recall = ratio(cm.tp, cm.tp + cm.fn, 0.0, m.recall_undefined);
  m.specificity = ratio(cm.tn, cm.tn + cm.fp, 0.0, m.specificity_undefined);
  return m;
}

Metrics confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs(scores, labels);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      (predicted ? cm.tp : cm.fn) += 1;
    } else {
      (predicted ? cm.fp : cm.tn) += 1;
    }
  }
  return metrics_from(cm);
}

Curve pr_curve(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0) throw ValidationError("PR curve needs at least one positive label");
  Curve c;
  c.kind = CurveKind::PR;
  double prev_recall = 0;
  for (const auto& s : threshold_steps(scores, labels)) {
    const double recall = static_cast<double>(s.tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
    c.points.push_back({recall, precision});
    c.area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return c;
}

Curve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const std::int64_t p = std::count(labels.begin(), labels.end(), 1);
  const std::int64_t n = static_cast<std::int64_t>(labels.size()) - p;
  if (p == 0 || n == 0) throw ValidationError("ROC curve needs both classes present");
  Curve c;
  c.kind = CurveKind::ROC;
  c.points.push_back({0.0, 0.0});
  // Twice the area in units of one (negative, positive) pair.
  std::int64_t twice_area = 0;
  Step prev{0, 0};
  for (const auto& s : threshold_steps(scores, labels)) {
    twice_area += (s.fp - prev.fp) * (s.tp + prev.tp);
    c.points.push_back({static_cast<double>(s.fp) / static_cast<double>(n), static_cast<double>(s.tp) / static_cast<double>(p)});
    prev = s;
  }
  c.area = static_cast<double>(twice_area) / (2.0 * static_cast<double>(p) * static_cast<double>(n));
  return c;
}

std::vector<Fold> kfold(std::span<const int> labels, int k, std::uint64_t seed, bool stratified) {
  check_labels(labels);
  if (k < 2) throw ValidationError("k must be at least 2 (got " + std::to_string(k) + ")");
  if (labels.size() < static_cast<std::size_t>(k)) {
    throw ValidationError(std::to_string(labels.size()) + " samples cannot fill " + std::to_string(k) + " folds");
  }
  std::mt19937_64 rng(seed);
  std::vector<int> fold_of(labels.size(), 0);
  int next = 0;
  auto deal = [&](const std::vector<Index>& idx) {
    for (auto i : shuffled(idx, rng)) {
      fold_of[static_cast<std::size_t>(i)] = next;
      next = (next + 1) % k;
    }
  };
  if (stratified) {
    std::vector<Index> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<Index>(i));
    for (int c = 0; c < 2; ++c) {
      const auto count = by_class[c].size();
      if (count > 0 && count < static_cast<std::size_t>(k)) {
        throw ValidationError("class " + std::to_string(c) + " has " + std::to_string(count) +
                              " samples, fewer than k=" + std::to_string(k) + "; use a smaller k");
      }
    }
    deal(by_class[0]);
    deal(by_class[1]);
  } else {
    std::vector<Index> all(labels.size());
    std::iota(all.begin(), all.end(), 0);
    deal(all);
  }
  return folds_from_assignment(fold_of, k);
}

std::vector<Fold> group_kfold(std::span<const int> labels, std::span<const int> groups, int k, std::uint64_t seed) {
  check_labels(labels);
  if (groups.size() != labels.size()) throw ShapeError("groups and labels differ in length");
  if (k < 2) throw ValidationError("k must be at least 2 (got " + std::to_string(k) + ")");
  std::map<int, std::pair<std::int64_t, std::int64_t>> stats;  // group -> (positives, size)
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& s = stats[groups[i]];
    s.first += labels[i];
    s.second += 1;
  }
  std::vector<int> ids;
  int positive_groups = 0;
  for (const auto& [g, s] : stats) {
    ids.push_back(g);
    positive_groups += s.first > 0;
  }
  if (positive_groups < k) {
    throw ValidationError(std::to_string(positive_groups) + " groups contain positives, fewer than k=" +
                          std::to_string(k) + "; use a smaller k or split by window");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) { return stats[a].first > stats[b].first; });
  std::vector<std::int64_t> fold_pos(static_cast<std::size_t>(k), 0), fold_size(static_cast<std::size_t>(k), 0);
  std::map<int, int> fold_of_group;
  for (int g : ids) {
    std::size_t best = 0;
    for (std::size_t f = 1; f < fold_pos.size(); ++f) {
      if (std::pair(fold_pos[f], fold_size[f]) < std::pair(fold_pos[best], fold_size[best])) best = f;
    }
    fold_of_group[g] = static_cast<int>(best);
    fold_pos[best] += stats[g].first;
    fold_size[best] += stats[g].second;
  }
  std::vector<int> fold_of(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) fold_of[i] = fold_of_group[groups[i]];
  return folds_from_assignment(fold_of, k);
}

std::pair<std::vector<Index>, std::vector<Index>> stratified_holdout(std::span<const Index> rows,
                                                                     std::span<const int> labels, double fraction,
                                                                     std::uint64_t seed) {
  if (!(fraction > 0 && fraction < 1)) throw ValidationError("holdout fraction must be in (0, 1)");
  std::mt19937_64 rng(seed);
  std::vector<Index> keep, held;
  for (int c = 0; c < 2; ++c) {
    std::vector<Index> idx;
    for (auto r : rows) {
      if (labels[static_cast<std::size_t>(r)] == c) idx.push_back(r);
    }
    idx = shuffled(std::move(idx), rng);
    std::size_t n_held = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(idx.size())));
    n_held = idx.size() < 2 ? 0 : std::min(n_held, idx.size() - 1);
    held.insert(held.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_held));
    keep.insert(keep.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_held), idx.end());
  }
  std::sort(keep.begin(), keep.end());
  std::sort(held.begin(), held.end());
  return {keep, held};
}

PipelineResult evaluate_pipeline(const gbdt::FeatureMatrix& features, std::span<const int> labels,
                                 const std::vector<Fold>& folds, const PipelineOptions& options) {
  if (features.rows() != static_cast<Index>(labels.size())) throw ShapeError("features and labels differ in length");
  if (folds.empty()) throw ValidationError("no folds to evaluate");
  PipelineResult out;
  out.scores.assign(labels.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<int> seen(labels.size(), 0);
  const std::vector<int> y_all(labels.begin(), labels.end());

  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& fold = folds[f];
    auto [fit_rows, es_rows] = stratified_holdout(fold.train, labels, options.early_stopping_fraction,
                                                  options.seed + 1000003ULL * (f + 1));
    auto gather = [&](const std::vector<Index>& rows) {
      std::vector<int> y;
      for (auto r : rows) y.push_back(y_all[static_cast<std::size_t>(r)]);
      return y;
    };
    const gbdt::FeatureMatrix x_fit = features(fit_rows, Eigen::all);
    const gbdt::FeatureMatrix x_es = features(es_rows, Eigen::all);
    const auto y_fit = gather(fit_rows);
    const auto y_es = gather(es_rows);
    const auto model = es_rows.empty() ? gbdt::fit(x_fit, y_fit, options.gbdt)
                                       : gbdt::fit(x_fit, y_fit, options.gbdt, &x_es, y_es);

    const gbdt::FeatureMatrix x_test = features(fold.test, Eigen::all);
    const Eigen::VectorXd p = gbdt::predict_proba(model, x_test);
    std::vector<double> scores(p.data(), p.data() + p.size());
    const auto y_test = gather(fold.test);
    FoldResult fr;
    fr.fold = static_cast<int>(f);
    fr.metrics = confusion(scores, y_test, options.threshold);
    fr.best_round = model.best_round;
    fr.trees = static_cast<int>(model.trees.size());
    out.pooled.counts += fr.metrics.counts;
    out.folds.push_back(fr);
    for (std::size_t i = 0; i < fold.test.size(); ++i) {
      const auto r = static_cast<std::size_t>(fold.test[i]);
      out.scores[r] = scores[i];
      seen[r] += 1;
    }
  }

  double sum = 0;
  for (const auto& fr : out.folds) sum += fr.metrics.accuracy;
  out.accuracy_mean = sum / static_cast<double>(out.folds.size());
  double var = 0;
  for (const auto& fr : out.folds) var += (fr.metrics.accuracy - out.accuracy_mean) * (fr.metrics.accuracy - out.accuracy_mean);
  out.accuracy_std = std::sqrt(var / static_cast<double>(out.folds.size()));
  out.pooled = metrics_from(out.pooled.counts);

  std::vector<double> pooled_scores;
  std::vector<int> pooled_labels;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (seen[i] > 1) throw ValidationError("sample " + std::to_string(i) + " is in more than one test fold");
    if (seen[i] == 1) {
      pooled_scores.push_back(out.scores[i]);
      pooled_labels.push_back(labels[i]);
    }
  }
  out.pr = pr_curve(pooled_scores, pooled_labels);
  out.roc = roc_curve(pooled_scores, pooled_labels);
  return out;
}

void Report::set(std::string key, std::string value) {
  for (auto& [k, v] : fields) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  fields.emplace_back(std::move(key), std::move(value));
}

const std::string* Report::get(const std::string& key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return &v;
  }
  return nullptr;
}

const Report::Section* Report::section(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string write_report(const Report& report) {
  std::ostringstream out;
  for (const auto& [k, v] : report.fields) out << k << ": " << v << '\n';
  for (const auto& s : report.sections) {
    out << "\n[" << s.name << "]\n";
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << '\n';
    };
    line(s.header);
    for (const auto& r : s.rows) line(r);
  }
  return out.str();
}

Report parse_report(std::string_view text) {
  Report report;
  std::istringstream in{std::string(text)};
  std::string line;
  int row = 0;
  Report::Section* current = nullptr;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      report.sections.push_back({line.substr(1, line.size() - 2), {}, {}});
      current = &report.sections.back();
      continue;
    }
    if (current) {
      auto cells = split_csv(line);
      if (current->header.empty()) {
        current->header = std::move(cells);
      } else {
        if (cells.size() != current->header.size()) {
          throw ParseError("report row " + std::to_string(row) + ": expected " +
                           std::to_string(current->header.size()) + " columns");
        }
        current->rows.push_back(std::move(cells));
      }
      continue;
    }
    const auto colon = line.find(": ");
    if (colon == std::string::npos) throw ParseError("report row " + std::to_string(row) + ": expected 'key: value'");
    report.fields.emplace_back(line.substr(0, colon), line.substr(colon + 2));
  }
  return report;
}

void save_report(const Report& report, const std::filesystem::path& path) {
  const auto text = write_report(report);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Report load_report(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_report(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void append_curve(Report& report, const std::string& name, const Curve& curve) {
  Report::Section s;
  s.name = name;
  s.header = curve.kind == CurveKind::PR ? std::vector<std::string>{"recall", "precision"}
                                         : std::vector<std::string>{"fpr", "tpr"};
  for (const auto& p : curve.points) s.rows.push_back({format_double(p.x), format_double(p.y)});
  report.sections.push_back(std::move(s));
}

void append_result(Report& report, const PipelineResult& result) {
  const auto& m = result.pooled;
  report.set("folds", std::to_string(result.folds.size()));
  report.set("accuracy_mean", format_double(result.accuracy_mean));
  report.set("accuracy_std", format_double(result.accuracy_std));
  report.set("pooled_tp", std::to_string(m.counts.tp));
  report.set("pooled_fp", std::to_string(m.counts.fp));
  report.set("pooled_tn", std::to_string(m.counts.tn));
  report.set("pooled_fn", std::to_string(m.counts.fn));
  report.set("pooled_accuracy", format_double(m.accuracy));
  report.set("pooled_precision", format_double(m.precision));
  report.set("pooled_recall", format_double(m.recall));
  report.set("pooled_specificity", format_double(m.specificity));
  report.set("precision_convention", "1.0 when no positive predictions (flagged in precision_undefined)");
  report.set("pr_auc", format_double(result.pr.area));
  report.set("roc_auc", format_double(result.roc.area));

  Report::Section folds;
  folds.name = "fold_metrics";
  folds.header = {"fold", "n_test", "tp", "fp", "tn", "fn", "accuracy", "precision", "precision_undefined",
                  "recall", "specificity", "best_round", "trees"};
  for (const auto& f : result.folds) {
    const auto& c = f.metrics.counts;
    folds.rows.push_back({std::to_string(f.fold), std::to_string(c.total()), std::to_string(c.tp),
                          std::to_string(c.fp), std::to_string(c.tn), std::to_string(c.fn),
                          format_double(f.metrics.accuracy), format_double(f.metrics.precision),
                          f.metrics.precision_undefined ? "1" : "0", format_double(f.metrics.recall),
                          format_double(f.metrics.specificity), std::to_string(f.best_round),
                          std::to_string(f.trees)});
  }
  report.sections.push_back(std::move(folds));
  append_curve(report, "roc_curve", result.roc);
  append_curve(report, "pr_curve", result.pr);
}

}  // namespace latentwire::eval
