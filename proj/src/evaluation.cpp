// Copyright 2026 The figsep Authors. All Rights Reserved.
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

#include "figsep/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace figsep {

int MatchResult::true_positives() const {
  return static_cast<int>(std::count_if(entries.begin(), entries.end(),
                                        [](const Entry& e) { return e.true_positive; }));
}

int MatchResult::false_positives() const {
  return static_cast<int>(entries.size()) - true_positives();
}

MatchResult match_detections(std::span<const Prediction> preds, std::span<const GroundTruth> gts,
                             double iou_threshold, bool class_aware) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
    throw std::invalid_argument("match_detections: threshold must lie in (0, 1]");
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].confidence > preds[b].confidence;
  });
  MatchResult result;
  result.entries.resize(preds.size());
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t k : order) {
    const Prediction& p = preds[k];
    auto& e = result.entries[k];
    e.confidence = p.confidence;
    double best = -1.0;
    int best_g = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || (class_aware && gts[g].cls != p.cls)) continue;
      const double v = iou(p.box, gts[g].box);
      if (v > best) {
        best = v;
        best_g = static_cast<int>(g);
      }
    }
    if (best_g >= 0 && best >= iou_threshold) {
      e.true_positive = true;
      e.gt_index = best_g;
      taken[best_g] = true;
    }
  }
  result.false_negatives =
      static_cast<int>(std::count(taken.begin(), taken.end(), false));
  return result;
}

std::string PRCurve::to_csv() const {
  std::ostringstream os;
  os << "recall,precision\n";
  char buf[64];
  for (std::size_t k = 0; k < recall.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", recall[k], precision[k]);
    os << buf;
  }
  return os.str();
}

PRCurve average_precision(std::span<const MatchResult> matches, Interpolation interp) {
  struct Item {
    double confidence;
    bool tp;
  };
  std::vector<Item> items;
  int n_gt = 0;
  for (const auto& m : matches) {
    n_gt += m.ground_truths();
    // Entries are in input order; ties across the pooled list keep that order.
    for (const auto& e : m.entries) items.push_back({e.confidence, e.true_positive});
  }
  if (n_gt == 0) throw std::domain_error("average_precision: no ground truth");
  std::stable_sort(items.begin(), items.end(),
                   [](const Item& a, const Item& b) { return a.confidence > b.confidence; });
  PRCurve curve;
  int tp = 0;
  for (std::size_t k = 0; k < items.size(); ++k) {
    tp += items[k].tp ? 1 : 0;
    curve.recall.push_back(static_cast<double>(tp) / n_gt);
    curve.precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
  }
  // Precision envelope: running max from the right.
  std::vector<double> env = curve.precision;
  for (std::size_t k = env.size(); k-- > 1;) env[k - 1] = std::max(env[k - 1], env[k]);
  if (interp == Interpolation::kAllPoint) {
    double prev_r = 0.0;
    for (std::size_t k = 0; k < env.size(); ++k) {
      curve.ap += (curve.recall[k] - prev_r) * env[k];
      prev_r = curve.recall[k];
    }
  } else {
    for (int t = 0; t <= 10; ++t) {
      const double r = t / 10.0;
      double p = 0.0;
      for (std::size_t k = 0; k < env.size(); ++k)
        if (curve.recall[k] >= r - 1e-12) {
          p = env[k];
          break;
        }
      curve.ap += p / 11.0;
    }
  }
  curve.ap = std::clamp(curve.ap, 0.0, 1.0);
  return curve;
}

namespace {

std::set<int> gt_classes(std::span<const ImageEval> images) {
  std::set<int> classes;
  for (const auto& im : images)
    for (const auto& g : im.gts) classes.insert(g.cls);
  return classes;
}

}  // namespace

PRCurve class_average_precision(std::span<const ImageEval> images, int cls, double iou_threshold,
                                Interpolation interp) {
  std::vector<MatchResult> matches;
  for (const auto& im : images) {
    std::vector<Prediction> p;
    std::vector<GroundTruth> g;
    for (const auto& x : im.preds)
      if (x.cls == cls) p.push_back(x);
    for (const auto& x : im.gts)
      if (x.cls == cls) g.push_back(x);
    matches.push_back(match_detections(p, g, iou_threshold, true));
  }
  return average_precision(matches, interp);
}

double mean_average_precision(std::span<const ImageEval> images, double iou_threshold,
                              bool class_aware, Interpolation interp) {
  if (!class_aware) {
    std::vector<MatchResult> matches;
    for (const auto& im : images) matches.push_back(match_detections(im.preds, im.gts, iou_threshold, false));
    return average_precision(matches, interp).ap;
  }
  const auto classes = gt_classes(images);
  if (classes.empty()) throw std::domain_error("mean_average_precision: no ground truth");
  double sum = 0.0;
  for (int c : classes) sum += class_average_precision(images, c, iou_threshold, interp).ap;
  return sum / static_cast<double>(classes.size());
}

std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back(0.5 + 0.05 * k);
  return t;
}

double ap_range(std::span<const ImageEval> images, std::span<const double> thresholds,
                bool class_aware) {
  if (thresholds.empty()) throw std::invalid_argument("ap_range: no thresholds");
  double sum = 0.0;
  for (double t : thresholds) sum += mean_average_precision(images, t, class_aware);
  return sum / static_cast<double>(thresholds.size());
}

LabelPR label_pr_from_counts(int true_positives, int false_positives, int ground_truths) {
  if (true_positives < 0 || false_positives < 0 || ground_truths < true_positives)
    throw std::invalid_argument("label_pr: inconsistent counts");
  LabelPR r;
  r.true_positives = true_positives;
  r.false_positives = false_positives;
  r.false_negatives = ground_truths - true_positives;
  const int predicted = true_positives + false_positives;
  r.no_predictions = predicted == 0;
  r.precision = predicted == 0 ? 1.0 : static_cast<double>(true_positives) / predicted;
  r.recall = ground_truths == 0 ? 1.0 : static_cast<double>(true_positives) / ground_truths;
  return r;
}

LabelPR label_pr(std::span<const ImageEval> images, double iou_threshold) {
  int tp = 0, fp = 0, n_gt = 0;
  for (const auto& im : images) {
    const MatchResult m = match_detections(im.preds, im.gts, iou_threshold, true);
    tp += m.true_positives();
    fp += m.false_positives();
    n_gt += static_cast<int>(im.gts.size());
  }
  return label_pr_from_counts(tp, fp, n_gt);
}

// ---------------------------------------------------------------------------
// Tables

const AblationTable::Row& AblationTable::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw std::out_of_range("ablation table has no run '" + name + "'");
}

double AblationTable::per_class(const std::string& run, int cls) const {
  const auto it = std::find(classes.begin(), classes.end(), cls);
  if (it == classes.end()) throw std::out_of_range("ablation table has no class " + std::to_string(cls));
  return row(run).per_class[static_cast<std::size_t>(it - classes.begin())];
}

namespace {

std::string fmt(double v, const char* f = "%.4f") {
  char buf[32];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pct(double v) { return fmt(100.0 * v, "%.1f%%"); }

bool same_ground_truth(const std::vector<ImageEval>& a, const std::vector<ImageEval>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].image_id != b[k].image_id || a[k].gts.size() != b[k].gts.size()) return false;
    for (std::size_t g = 0; g < a[k].gts.size(); ++g)
      if (a[k].gts[g].cls != b[k].gts[g].cls || !(a[k].gts[g].box == b[k].gts[g].box)) return false;
  }
  return true;
}

}  // namespace

AblationTable ablation_report(std::span<const NamedRun> runs, const Alphabet& alphabet) {
  if (runs.empty()) throw std::invalid_argument("ablation_report: no runs");
  for (const auto& r : runs)
    if (!same_ground_truth(r.images, runs.front().images))
      throw std::invalid_argument("ablation_report: run '" + r.name +
                                  "' was evaluated on a different corpus");
  AblationTable table;
  for (int c : gt_classes(runs.front().images)) {
    table.classes.push_back(c);
    table.class_names.push_back(c >= 1 && c <= alphabet.size() ? alphabet.glyph(c) : std::to_string(c));
  }
  const auto thresholds = coco_thresholds();
  for (const auto& run : runs) {
    AblationTable::Row row;
    row.name = run.name;
    for (int c : table.classes) row.per_class.push_back(class_average_precision(run.images, c, 0.5).ap);
    row.class_average = row.per_class.empty()
                            ? 0.0
                            : std::accumulate(row.per_class.begin(), row.per_class.end(), 0.0) /
                                  static_cast<double>(row.per_class.size());
    row.ap50 = mean_average_precision(run.images, 0.5);
    row.ap75 = mean_average_precision(run.images, 0.75);
    row.ap50_95 = ap_range(run.images, thresholds);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string AblationTable::to_csv() const {
  std::ostringstream os;
  os << "run";
  for (const auto& n : class_names) os << ",ap50_" << n;
  os << ",class_avg,ap50,ap75,ap50_95\n";
  for (const auto& r : rows) {
    os << r.name;
    for (double v : r.per_class) os << ',' << fmt(v);
    os << ',' << fmt(r.class_average) << ',' << fmt(r.ap50) << ',' << fmt(r.ap75) << ','
       << fmt(r.ap50_95) << '\n';
  }
  return os.str();
}

std::string AblationTable::to_text() const {
  std::ostringstream os;
  std::size_t w = 8;
  for (const auto& r : rows) w = std::max(w, r.name.size() + 2);
  auto pad = [](std::string s, std::size_t n) {
    s.resize(std::max(n, s.size()), ' ');
    return s;
  };
  os << pad("Run", w);
  for (const auto& n : class_names) os << pad(n, 8);
  os << pad("Avg.", 8) << pad("AP50", 8) << pad("AP75", 8) << "AP50:95\n";
  for (const auto& r : rows) {
    os << pad(r.name, w);
    for (double v : r.per_class) os << pad(pct(v), 8);
    os << pad(pct(r.class_average), 8) << pad(pct(r.ap50), 8) << pad(pct(r.ap75), 8)
       << pct(r.ap50_95) << '\n';
  }
  return os.str();
}

std::string SeparationReport::to_csv() const {
  std::ostringstream os;
  os << "images,ap50,ap75,ap50_95,label_precision,label_recall,label_tp,label_fp,label_fn\n"
     << images << ',' << fmt(ap50) << ',' << fmt(ap75) << ',' << fmt(ap50_95) << ','
     << fmt(labels.precision) << ',' << fmt(labels.recall) << ',' << labels.true_positives << ','
     << labels.false_positives << ',' << labels.false_negatives << '\n';
  return os.str();
}

std::string SeparationReport::to_text() const {
  std::ostringstream os;
  os << "Method      AP_0.5   AP_0.75  AP_0.5:0.95\n"
     << "Proposed    " << pct(ap50) << std::string(9 - pct(ap50).size(), ' ') << pct(ap75)
     << std::string(9 - pct(ap75).size(), ' ') << pct(ap50_95) << "\n\n"
     << "Subfigure labels: " << labels.true_positives << " TP, " << labels.false_positives
     << " FP, " << labels.false_negatives << " FN; precision " << fmt(labels.precision)
     << ", recall " << fmt(labels.recall) << "\n";
  return os.str();
}

}  // namespace figsep
