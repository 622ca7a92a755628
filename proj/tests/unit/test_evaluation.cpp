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

#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "figsep/evaluation.hpp"
#include "oracles.hpp"

using namespace figsep;

namespace {

// Exhaustive greedy reference: scan confidences high to low, for each one scan
// every ground truth.
std::vector<int> brute_match(const std::vector<Prediction>& preds, const std::vector<GroundTruth>& gts,
                             double thr, bool aware) {
  std::vector<int> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return preds[a].confidence > preds[b].confidence; });
  std::vector<bool> used(gts.size(), false);
  std::vector<int> out(preds.size(), -1);
  for (int p : order) {
    int best = -1;
    double best_iou = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || (aware && gts[g].cls != preds[p].cls)) continue;
      const double v = iou(preds[p].box, gts[g].box);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0 && best_iou >= thr) {
      used[best] = true;
      out[p] = best;
    }
  }
  return out;
}

// Area under the monotone envelope, recomputed from scratch at every recall step.
double brute_ap(std::vector<std::pair<double, bool>> scored, int n_gt) {
  std::stable_sort(scored.begin(), scored.end(), [](auto& a, auto& b) { return a.first > b.first; });
  std::vector<double> rec, prec;
  int tp = 0;
  for (std::size_t k = 0; k < scored.size(); ++k) {
    tp += scored[k].second;
    rec.push_back(double(tp) / n_gt);
    prec.push_back(double(tp) / double(k + 1));
  }
  double ap = 0, prev_r = 0;
  for (std::size_t k = 0; k < rec.size(); ++k) {
    if (rec[k] <= prev_r) continue;
    double best = 0;
    for (std::size_t m = k; m < rec.size(); ++m) best = std::max(best, prec[m]);
    ap += (rec[k] - prev_r) * best;
    prev_r = rec[k];
  }
  return ap;
}

}  // namespace

TEST_CASE("matching agrees with an exhaustive greedy reference") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> cls(1, 3), n(0, 8);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<GroundTruth> gts;
    std::vector<Prediction> preds;
    const int ng = n(rng), np = n(rng);
    for (int k = 0; k < ng; ++k) gts.push_back({testing::random_box(rng, 0.05, 0.4), cls(rng)});
    for (int k = 0; k < np; ++k) {
      BBox b = testing::random_box(rng, 0.05, 0.4);
      if (ng > 0 && u(rng) < 0.6) {
        b = gts[static_cast<std::size_t>(k % ng)].box;
        b.x += 0.02 * (u(rng) - 0.5);
      }
      preds.push_back({b, std::round(u(rng) * 4) / 4, cls(rng)});
    }
    for (bool aware : {false, true})
      for (double thr : {0.3, 0.5, 0.75}) {
        const auto m = match_detections(preds, gts, thr, aware);
        const auto ref = brute_match(preds, gts, thr, aware);
        int tp = 0;
        for (std::size_t k = 0; k < preds.size(); ++k) {
          CHECK(m.entries[k].gt_index == ref[k]);
          CHECK(m.entries[k].true_positive == (ref[k] >= 0));
          tp += ref[k] >= 0;
        }
        CHECK(m.true_positives() == tp);
        CHECK(m.false_negatives == ng - tp);
        CHECK(m.ground_truths() == ng);
      }
  }
}

TEST_CASE("matching rejects thresholds outside (0, 1]") {
  const std::vector<Prediction> p;
  const std::vector<GroundTruth> g;
  CHECK_THROWS_AS(match_detections(p, g, 0.0, true), std::invalid_argument);
  CHECK_THROWS_AS(match_detections(p, g, 1.5, true), std::invalid_argument);
  CHECK_NOTHROW(match_detections(p, g, 1.0, true));
}

TEST_CASE("hand-computed average precision") {
  // TP, FP, TP at 0.9, 0.8, 0.7 against two ground truths.
  const std::vector<GroundTruth> gts{{{0.2, 0.2, 0.1, 0.1}, 1}, {{0.7, 0.7, 0.1, 0.1}, 1}};
  const std::vector<Prediction> preds{
      {{0.2, 0.2, 0.1, 0.1}, 0.9, 1}, {{0.5, 0.5, 0.1, 0.1}, 0.8, 1}, {{0.7, 0.7, 0.1, 0.1}, 0.7, 1}};
  const MatchResult m = match_detections(preds, gts, 0.5, true);
  const PRCurve c = average_precision(std::span<const MatchResult>(&m, 1));
  CHECK(c.ap == doctest::Approx(0.5 * 1.0 + 0.5 * (2.0 / 3.0)));
  REQUIRE(c.recall.size() == 3);
  CHECK(c.precision[1] == doctest::Approx(0.5));
  CHECK(std::is_sorted(c.recall.begin(), c.recall.end()));

  const PRCurve eleven = average_precision(std::span<const MatchResult>(&m, 1), Interpolation::kElevenPoint);
  CHECK(eleven.ap == doctest::Approx((6 * 1.0 + 5 * (2.0 / 3.0)) / 11));
}

TEST_CASE("pooled average precision agrees with the reference envelope") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<MatchResult> ms(3);
    std::vector<std::pair<double, bool>> pooled;
    int n_gt = 0;
    for (auto& m : ms) {
      const int tp_budget = 1 + static_cast<int>(u(rng) * 5);
      int tp = 0;
      for (int k = 0; k < 6; ++k) {
        const bool hit = tp < tp_budget && u(rng) < 0.6;
        tp += hit;
        const double conf = std::round(u(rng) * 10) / 10;
        m.entries.push_back({hit, hit ? tp - 1 : -1, conf});
      }
      m.false_negatives = tp_budget - tp;
      n_gt += tp_budget;
      for (const auto& e : m.entries) pooled.push_back({e.confidence, e.true_positive});
    }
    CHECK(average_precision(ms).ap == doctest::Approx(brute_ap(pooled, n_gt)).epsilon(1e-12));
  }
}

TEST_CASE("average precision without ground truth is undefined") {
  MatchResult m;
  m.entries.push_back({false, -1, 0.5});
  CHECK_THROWS_AS(average_precision(std::span<const MatchResult>(&m, 1)), std::domain_error);
}

TEST_CASE("perfect predictions score one at every threshold") {
  std::mt19937_64 rng(23);
  std::vector<ImageEval> images(5);
  for (auto& im : images)
    for (int c = 1; c <= 4; ++c) {
      const BBox b = testing::random_box(rng, 0.05, 0.2);
      im.gts.push_back({b, c});
      im.preds.push_back({b, 0.9, c});
    }
  for (double t : coco_thresholds()) CHECK(mean_average_precision(images, t) == doctest::Approx(1.0));
  CHECK(ap_range(images, coco_thresholds()) == doctest::Approx(1.0));
  CHECK(coco_thresholds().size() == 10);
  CHECK(coco_thresholds().back() == doctest::Approx(0.95));
}

TEST_CASE("ap over a threshold range averages the per-threshold values") {
  // One prediction shifted so that its IoU with the ground truth is 0.65.
  const BBox g{0.5, 0.5, 0.2, 0.2};
  const double shift = 0.2 * (1 - 0.65) / (1 + 0.65);  // IoU = (w - s) / (w + s)
  std::vector<ImageEval> images(1);
  images[0].gts.push_back({g, 1});
  images[0].preds.push_back({{0.5 + shift, 0.5, 0.2, 0.2}, 0.9, 1});
  REQUIRE(iou(images[0].preds[0].box, g) == doctest::Approx(0.65));
  const std::vector<double> thr{0.3, 0.6, 0.9};
  CHECK(ap_range(images, thr) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("class-aware mean skips classes absent from ground truth") {
  std::vector<ImageEval> images(1);
  images[0].gts = {{{0.2, 0.2, 0.1, 0.1}, 1}, {{0.7, 0.7, 0.1, 0.1}, 2}};
  images[0].preds = {{{0.2, 0.2, 0.1, 0.1}, 0.9, 1}, {{0.7, 0.7, 0.1, 0.1}, 0.9, 1}};
  CHECK(mean_average_precision(images, 0.5, true) == doctest::Approx(0.5));
  CHECK(mean_average_precision(images, 0.5, false) == doctest::Approx(1.0));
  CHECK(class_average_precision(images, 2, 0.5).ap == 0.0);
  images[0].preds.push_back({{0.4, 0.4, 0.1, 0.1}, 0.1, 7});
  CHECK(mean_average_precision(images, 0.5, true) == doctest::Approx(0.5));
}

TEST_CASE("label precision and recall from counts") {
  const LabelPR a = label_pr_from_counts(3, 1, 4);
  CHECK(a.precision == doctest::Approx(0.75));
  CHECK(a.recall == doctest::Approx(0.75));
  CHECK(a.false_negatives == 1);
  const LabelPR b = label_pr_from_counts(4777, 24, 4982);
  CHECK(std::abs(b.precision - 0.9950) < 5e-5);
  CHECK(std::abs(b.recall - 0.9589) < 5e-5);
  const LabelPR none = label_pr_from_counts(0, 0, 5);
  CHECK(none.no_predictions);
  CHECK(none.precision == 1.0);
  CHECK(none.recall == 0.0);
}

TEST_CASE("label precision and recall from matched images") {
  std::vector<ImageEval> images(1);
  images[0].gts = {{{0.1, 0.1, 0.05, 0.05}, 1}, {{0.3, 0.3, 0.05, 0.05}, 2},
                   {{0.5, 0.5, 0.05, 0.05}, 3}, {{0.7, 0.7, 0.05, 0.05}, 4}};
  images[0].preds = {{{0.1, 0.1, 0.05, 0.05}, 0.9, 1}, {{0.3, 0.3, 0.05, 0.05}, 0.9, 2},
                     {{0.5, 0.5, 0.05, 0.05}, 0.9, 3}, {{0.7, 0.7, 0.05, 0.05}, 0.9, 5}};
  const LabelPR pr = label_pr(images, 0.5);
  CHECK(pr.true_positives == 3);
  CHECK(pr.false_positives == 1);
  CHECK(pr.false_negatives == 1);
  CHECK(pr.precision == doctest::Approx(0.75));
  CHECK(pr.recall == doctest::Approx(0.75));
}

TEST_CASE("ablation report tabulates each run") {
  const Alphabet alphabet = Alphabet::lowercase(3);
  NamedRun good{"decoupled", {}}, bad{"end-to-end", {}};
  ImageEval im;
  im.gts = {{{0.2, 0.2, 0.1, 0.1}, 1}, {{0.7, 0.7, 0.1, 0.1}, 3}};
  im.preds = {{{0.2, 0.2, 0.1, 0.1}, 0.9, 1}, {{0.7, 0.7, 0.1, 0.1}, 0.8, 3}};
  good.images.push_back(im);
  im.preds[1].cls = 2;
  bad.images.push_back(im);
  const std::vector<NamedRun> runs{good, bad};
  const AblationTable t = ablation_report(runs, alphabet);
  CHECK(t.classes == std::vector<int>{1, 3});
  CHECK(t.per_class("decoupled", 3) == doctest::Approx(1.0));
  CHECK(t.per_class("end-to-end", 3) == doctest::Approx(0.0));
  CHECK(t.row("end-to-end").class_average == doctest::Approx(0.5));
  CHECK(t.to_csv().find("end-to-end") != std::string::npos);
  CHECK(t.to_text().find("c") != std::string::npos);
  CHECK_THROWS(t.row("missing"));

  NamedRun other = bad;
  other.images[0].gts.pop_back();
  const std::vector<NamedRun> mismatched{good, other};
  CHECK_THROWS_AS(ablation_report(mismatched, alphabet), std::invalid_argument);
}

TEST_CASE("separation report renders both formats") {
  SeparationReport r;
  r.ap50 = 0.9;
  r.ap75 = 0.7;
  r.ap50_95 = 0.6;
  r.labels = label_pr_from_counts(3, 1, 4);
  r.images = 10;
  CHECK(r.to_csv().find("0.9") != std::string::npos);
  CHECK(r.to_text().find("AP") != std::string::npos);
}
