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

#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "figsep/checkpoint.hpp"
#include "figsep/label_detector.hpp"
#include "oracles.hpp"

using namespace figsep;

namespace {

DetectorConfig toy_config() {
  DetectorConfig c;
  c.input_size = 32;
  c.backbone = nn::BackboneConfig{3, {4, 6, 8}, 1, 6, {4, 8}};
  c.anchors = AnchorSet{{{{0.05, 0.06}, {0.1, 0.08}}, {{0.2, 0.2}, {0.4, 0.3}}}};
  return c;
}

HeadOutputs<double> random_outputs(const DetectorConfig& c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  HeadOutputs<double> out;
  for (std::size_t s = 0; s < c.strides().size(); ++s) {
    const int g = c.input_size / c.strides()[s];
    auto m = nn::FeatureMap<double>::zeros(c.anchors.count(s) * c.channels_per_anchor(), g, g);
    for (Eigen::Index k = 0; k < m.data.size(); ++k) m.data.data()[k] = n(rng);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<double> flatten(const HeadOutputs<double>& o) {
  std::vector<double> v;
  for (const auto& m : o) v.insert(v.end(), m.data.data(), m.data.data() + m.data.size());
  return v;
}

HeadOutputs<double> unflatten(const std::vector<double>& v, HeadOutputs<double> like) {
  std::size_t k = 0;
  for (auto& m : like)
    for (Eigen::Index i = 0; i < m.data.size(); ++i) m.data.data()[i] = v[k++];
  return like;
}

RawDetection det(BBox b, double conf) {
  RawDetection d;
  d.box = b;
  d.confidence = conf;
  return d;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(DetectorConfig{}.validate());
  CHECK_NOTHROW(DetectorConfig::desk().validate());
  DetectorConfig c = toy_config();
  c.conf_threshold = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = toy_config();
  c.lambda = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = toy_config();
  c.anchors.per_scale.pop_back();
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = toy_config();
  c.input_size = 30;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("config survives a JSON round trip") {
  const DetectorConfig c = DetectorConfig::desk();
  CHECK(nlohmann::json(c).get<DetectorConfig>() == c);
}

TEST_CASE("zero logits decode to cell centers with prior sizes") {
  const DetectorConfig c = toy_config();
  HeadOutputs<double> out;
  for (std::size_t s = 0; s < 2; ++s) {
    const int g = c.input_size / c.strides()[s];
    out.push_back(nn::FeatureMap<double>::zeros(c.anchors.count(s) * 5, g, g));
  }
  const auto dets = predict_boxes(out, c);
  CHECK(dets.size() == 8 * 8 * 2 + 4 * 4 * 2);
  for (const auto& d : dets) {
    const GridShape grid{c.input_size / c.strides()[static_cast<std::size_t>(d.cell.scale)],
                         c.input_size / c.strides()[static_cast<std::size_t>(d.cell.scale)]};
    const auto [cx, cy] = cell_center(d.cell, grid);
    const auto& p = c.anchors.per_scale[static_cast<std::size_t>(d.cell.scale)][static_cast<std::size_t>(d.anchor_index)];
    CHECK(d.box.x == doctest::Approx(cx));
    CHECK(d.box.y == doctest::Approx(cy));
    CHECK(d.box.w == doctest::Approx(p.w));
    CHECK(d.box.h == doctest::Approx(p.h));
    CHECK(d.confidence == doctest::Approx(0.5));
  }
}

TEST_CASE("encode then decode is the identity") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0), s(0.01, 0.5);
  const GridShape grid{13, 13};
  const AnchorPrior prior{0.1, 0.2};
  for (int k = 0; k < 2000; ++k) {
    const BBox b{u(rng), u(rng), s(rng), s(rng)};
    const GridCoord cell = center_cell(b, grid);
    const auto t = encode_anchor_box(b, cell, grid, prior);
    const BBox r = decode_anchor_box(t[0], t[1], t[2], t[3], cell, grid, prior);
    CHECK(std::abs(r.x - b.x) < 1e-6);
    CHECK(std::abs(r.y - b.y) < 1e-6);
    CHECK(std::abs(r.w - b.w) < 1e-6);
    CHECK(std::abs(r.h - b.h) < 1e-6);
  }
}

TEST_CASE("culling filters and suppresses") {
  const std::vector<RawDetection> none_pass{det({0.5, 0.5, 0.1, 0.1}, 0.3), det({0.2, 0.2, 0.1, 0.1}, 0.999)};
  CHECK(cull(none_pass, 0.9995, 0.45).empty());
  CHECK(filter_confidence(none_pass, 0.0).size() == 2);

  // Overlap 0.9: widths 0.1 vs 0.09 sharing a center.
  const std::vector<RawDetection> dup{det({0.5, 0.5, 0.1, 0.1}, 0.7), det({0.5, 0.5, 0.1, 0.09}, 0.8)};
  REQUIRE(iou(dup[0].box, dup[1].box) == doctest::Approx(0.9));
  const auto kept = cull(dup, 0.5, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].confidence == 0.8);
}

TEST_CASE("culling is monotone in epsilon and a subset of its input") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RawDetection> dets;
    for (int k = 0; k < 30; ++k) dets.push_back(det(testing::random_box(rng, 0.02, 0.3), u(rng)));
    std::size_t prev = dets.size() + 1;
    for (double eps = 0.0; eps < 1.0; eps += 0.05) {
      const auto f = filter_confidence(dets, eps);
      CHECK(f.size() <= prev);
      prev = f.size();
      for (const auto& d : f) CHECK(d.confidence > eps);
    }
  }
}

TEST_CASE("perfect predictions give near-zero loss") {
  const DetectorConfig c = toy_config();
  std::vector<LocalizationTarget> targets{{{0.3, 0.3, 0.05, 0.06}, 1}, {{0.7, 0.6, 0.38, 0.3}, 2}};
  HeadOutputs<double> out;
  for (std::size_t s = 0; s < 2; ++s) {
    const int g = c.input_size / c.strides()[s];
    auto m = nn::FeatureMap<double>::zeros(c.anchors.count(s) * 5, g, g);
    for (int a = 0; a < c.anchors.count(s); ++a) m.data.row(a * 5 + 4).setConstant(-40.0);
    out.push_back(std::move(m));
  }
  // Assignment oracle: best centered-prior IoU across all scales, then the center cell.
  for (const auto& t : targets) {
    double best = -1;
    std::size_t bs = 0;
    int ba = 0;
    for (std::size_t s = 0; s < 2; ++s)
      for (int a = 0; a < c.anchors.count(s); ++a) {
        const auto& p = c.anchors.per_scale[s][static_cast<std::size_t>(a)];
        const double v = iou(BBox{0.5, 0.5, t.box.w, t.box.h}, BBox{0.5, 0.5, p.w, p.h});
        if (v > best) {
          best = v;
          bs = s;
          ba = a;
        }
      }
    const GridShape grid{out[bs].height, out[bs].width};
    const GridCoord cell = grid_cell_of(t.box.x, t.box.y, grid);
    const auto enc = encode_anchor_box(t.box, cell, grid, c.anchors.per_scale[bs][static_cast<std::size_t>(ba)]);
    for (int k = 0; k < 4; ++k) out[bs].at(ba * 5 + k, cell.i, cell.j) = enc[static_cast<std::size_t>(k)];
    out[bs].at(ba * 5 + 4, cell.i, cell.j) = 40.0;
  }
  const DetectionLoss l = localization_loss<double>(out, targets, c);
  CHECK(l.regression < 1e-12);
  CHECK(l.confidence < 1e-12);
  CHECK(l.total >= 0.0);
}

TEST_CASE("no ground truth leaves only the negative confidence term") {
  const DetectorConfig c = toy_config();
  std::mt19937_64 rng(11);
  const auto out = random_outputs(c, rng);
  const DetectionLoss l = localization_loss<double>(out, {}, c);
  CHECK(l.regression == 0.0);
  double expected = 0.0;
  for (std::size_t s = 0; s < out.size(); ++s)
    for (int a = 0; a < c.anchors.count(s); ++a)
      for (Eigen::Index col = 0; col < out[s].data.cols(); ++col) {
        const double z = out[s].data(a * 5 + 4, col);
        expected += std::log1p(std::exp(z));
      }
  CHECK(l.confidence == doctest::Approx(expected));
  CHECK(l.total == doctest::Approx(c.lambda * expected));
}

TEST_CASE("zero-area ground truth is rejected") {
  const DetectorConfig c = toy_config();
  std::mt19937_64 rng(12);
  const std::vector<LocalizationTarget> bad{{{0.5, 0.5, 0.0, 0.1}, 1}};
  CHECK_THROWS_AS(localization_loss<double>(random_outputs(c, rng), bad, c), std::invalid_argument);
}

TEST_CASE("localization loss gradients match central differences") {
  std::mt19937_64 rng(13);
  for (int num_classes : {0, 3}) {
    DetectorConfig c = toy_config();
    c.num_classes = num_classes;
    c.lambda = 0.7;
    const auto out = random_outputs(c, rng, 0.5);
    const std::vector<LocalizationTarget> targets{
        {{0.31, 0.27, 0.06, 0.05}, 1}, {{0.72, 0.64, 0.33, 0.28}, 2}, {{0.12, 0.81, 0.09, 0.11}, 3}};
    HeadOutputs<double> grads;
    localization_loss<double>(out, targets, c, &grads);
    auto f = [&](const std::vector<double>& v) { return localization_loss<double>(unflatten(v, out), targets, c).total; };
    CHECK(testing::max_relative_error(f, flatten(out), flatten(grads)) < 1e-4);
  }
}

TEST_CASE("the localizer loss ignores label classes") {
  const DetectorConfig c = toy_config();
  std::mt19937_64 rng(14);
  const auto out = random_outputs(c, rng);
  std::vector<LocalizationTarget> targets{{{0.3, 0.3, 0.05, 0.06}, 1}, {{0.7, 0.6, 0.2, 0.2}, 2}};
  const double before = localization_loss<double>(out, targets, c).total;
  targets[0].cls = 2;
  targets[1].cls = 1;
  CHECK(localization_loss<double>(out, targets, c).total == before);
}

TEST_CASE("feature extraction is deterministic and shaped by the strides") {
  const DetectorConfig c = toy_config();
  const LabelDetector model(c, 3);
  const FigureRecord r = generate_synthetic_figure(SyntheticLayoutSpec{}, 2);
  const auto a = model.extract_features(r.image);
  const auto b = model.extract_features(r.image);
  REQUIRE(a.size() == 2);
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(a.scales[s].data == b.scales[s].data);
    CHECK(a.grid(s).rows == c.input_size / c.strides()[s]);
  }
  const BinaryMask mask(c.input_size, c.input_size);
  CHECK_THROWS_AS(model.extract_features(r.image, &mask), std::invalid_argument);
}

TEST_CASE("a one-figure corpus is overfit") {
  const DetectorConfig c = toy_config();
  const auto corpus = generate_corpus(CorpusSpec{}, 1, 5);
  TrainingSchedule sched;
  sched.steps = 200;
  sched.batch_size = 1;
  sched.learning_rate = 3e-3;
  AugmentOptions off;
  off.enabled = false;
  const auto run = train_localizer(corpus, c, sched, off);
  const auto losses = run.log.series("total");
  CHECK(run.log.window_mean("total", 190, 200) < 0.5 * losses.front());
  const auto again = train_localizer(corpus, c, sched, off);
  CHECK(again.log.to_csv() == run.log.to_csv());
  CHECK_THROWS_AS(train_localizer(std::span<const FigureRecord>{}, c, sched), std::invalid_argument);
}

TEST_CASE("checkpoints round-trip and reject mismatched configs") {
  const auto dir = std::filesystem::temp_directory_path() / "figsep_test_detector";
  std::filesystem::create_directories(dir);
  const DetectorConfig c = toy_config();
  const LabelDetector model(c, 4);
  model.save(dir / "ld.ckpt");
  const LabelDetector back = LabelDetector::load(dir / "ld.ckpt", c);
  const FigureRecord r = generate_synthetic_figure(SyntheticLayoutSpec{}, 2);
  const auto p0 = model.predict(r.image), p1 = back.predict(r.image);
  REQUIRE(p0.size() == p1.size());
  for (std::size_t k = 0; k < p0.size(); ++k) CHECK(p0[k].confidence == p1[k].confidence);
  DetectorConfig other = c;
  other.nms_iou = 0.3;
  CHECK_THROWS_AS(LabelDetector::load(dir / "ld.ckpt", other), CheckpointError);
  std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
  CHECK_THROWS_AS(LabelDetector::load(dir / "junk.ckpt"), CheckpointError);
}

TEST_CASE("joint detections take the argmax class") {
  RawDetection d = det({0.5, 0.5, 0.1, 0.1}, 0.8);
  d.class_probs = {0.2, 0.5, 0.3};
  const auto l = joint_labeled_boxes(std::vector<RawDetection>{d});
  REQUIRE(l.size() == 1);
  CHECK(l[0].cls == 2);
  CHECK(l[0].confidence == doctest::Approx(0.4));
}
