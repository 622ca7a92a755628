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

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "figsep/dataset.hpp"
#include "figsep/geometry.hpp"

namespace figsep {

struct Prediction {
  BBox box;
  double confidence{1.0};
  int cls{0};
};

struct GroundTruth {
  BBox box;
  int cls{0};
};

/// Per-prediction outcome (input order) plus the count of unmatched ground truths.
struct MatchResult {
  struct Entry {
    bool true_positive{false};
    int gt_index{-1};
    double confidence{0.0};
  };
  std::vector<Entry> entries;
  int false_negatives{0};

  int true_positives() const;
  int false_positives() const;
  int ground_truths() const { return true_positives() + false_negatives; }
};

/// Greedy matching in descending confidence (ties keep input order): a
/// prediction is a true positive iff the unmatched ground truth with the
/// highest IoU (same class when `class_aware`) reaches `iou_threshold`.
/// Throws std::invalid_argument unless the threshold lies in (0, 1].
MatchResult match_detections(std::span<const Prediction> preds, std::span<const GroundTruth> gts,
                             double iou_threshold, bool class_aware);

enum class Interpolation { kAllPoint, kElevenPoint };

struct PRCurve {
  std::vector<double> recall;     // non-decreasing
  std::vector<double> precision;
  double ap{0.0};

  std::string to_csv() const;
};

/// Pools matches from many images (ties broken by image order, then input
/// order) and integrates the precision envelope. Throws std::domain_error when
/// the matches contain no ground truth.
PRCurve average_precision(std::span<const MatchResult> matches,
                          Interpolation interp = Interpolation::kAllPoint);

/// Predictions and ground truth of one image.
struct ImageEval {
  std::string image_id;
  std::vector<Prediction> preds;
  std::vector<GroundTruth> gts;
};

/// Corpus AP at one IoU threshold. Class-aware: mean of per-class AP over the
/// classes present in the ground truth. Class-agnostic: pooled AP ignoring classes.
double mean_average_precision(std::span<const ImageEval> images, double iou_threshold,
                              bool class_aware = true,
                              Interpolation interp = Interpolation::kAllPoint);

/// AP restricted to one class (predictions and ground truth of other classes dropped).
PRCurve class_average_precision(std::span<const ImageEval> images, int cls, double iou_threshold,
                                Interpolation interp = Interpolation::kAllPoint);

/// Thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> coco_thresholds();

/// Mean of mean_average_precision over `thresholds`.
double ap_range(std::span<const ImageEval> images, std::span<const double> thresholds,
                bool class_aware = true);

struct LabelPR {
  double precision{1.0};
  double recall{0.0};
  int true_positives{0};
  int false_positives{0};
  int false_negatives{0};
  bool no_predictions{false};  // precision undefined; reported as 1.0
};

/// Precision and recall from raw counts.
LabelPR label_pr_from_counts(int true_positives, int false_positives, int ground_truths);

/// Class-aware matching at `iou_threshold` pooled over images.
LabelPR label_pr(std::span<const ImageEval> images, double iou_threshold);

struct NamedRun {
  std::string name;
  std::vector<ImageEval> images;
};

/// Per-class AP at 0.5 plus corpus-level APs for each run.
struct AblationTable {
  std::vector<int> classes;
  std::vector<std::string> class_names;
  struct Row {
    std::string name;
    std::vector<double> per_class;  // aligned with `classes`
    double class_average{0.0};
    double ap50{0.0};
    double ap75{0.0};
    double ap50_95{0.0};
  };
  std::vector<Row> rows;

  const Row& row(const std::string& name) const;
  double per_class(const std::string& run, int cls) const;
  std::string to_csv() const;
  std::string to_text() const;
};

/// Throws std::invalid_argument when the runs do not share identical ground truth.
AblationTable ablation_report(std::span<const NamedRun> runs, const Alphabet& alphabet);

/// Subfigure detection summary in the layout of a method comparison table.
struct SeparationReport {
  double ap50{0.0};
  double ap75{0.0};
  double ap50_95{0.0};
  LabelPR labels;
  int images{0};

  std::string to_csv() const;
  std::string to_text() const;
};

}  // namespace figsep
