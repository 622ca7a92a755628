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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "figsep/dataset.hpp"
#include "figsep/features.hpp"
#include "figsep/geometry.hpp"
#include "figsep/nn/backbone.hpp"
#include "figsep/training.hpp"
#include "json.hpp"

namespace figsep {

struct AnchorPrior {
  double w{0.1};
  double h{0.1};
  bool operator==(const AnchorPrior&) const = default;
};

/// Anchor priors per output scale (finest scale first), normalized units.
struct AnchorSet {
  std::vector<std::vector<AnchorPrior>> per_scale;

  int count(std::size_t scale) const { return static_cast<int>(per_scale.at(scale).size()); }
  bool operator==(const AnchorSet&) const = default;
};

/// Label localizer configuration. With `num_classes == 0` the model is
/// class-agnostic; a positive value adds per-anchor class logits and yields the
/// jointly trained end-to-end detector used as the decoupling baseline.
struct DetectorConfig {
  int input_size{416};
  nn::BackboneConfig backbone{3, {32, 64, 128, 256, 512}, 2, 128, {8, 16, 32}};
  AnchorSet anchors{{{{0.02, 0.025}, {0.03, 0.035}, {0.04, 0.045}},
                     {{0.06, 0.07}, {0.09, 0.1}, {0.13, 0.15}},
                     {{0.2, 0.2}, {0.35, 0.35}, {0.6, 0.6}}}};
  double conf_threshold{0.5};  // epsilon
  double lambda{1.0};
  double nms_iou{0.45};
  double ignore_iou{0.7};
  int num_classes{0};

  const std::vector<int>& strides() const { return backbone.out_strides; }
  int channels_per_anchor() const { return 5 + num_classes; }
  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  /// Compact CPU preset used by the desk-scale benchmark.
  static DetectorConfig desk();
  bool operator==(const DetectorConfig&) const = default;
};

void to_json(nlohmann::json& j, const AnchorSet& a);
void from_json(const nlohmann::json& j, AnchorSet& a);
void to_json(nlohmann::json& j, const DetectorConfig& c);
void from_json(const nlohmann::json& j, DetectorConfig& c);

namespace nn {
void to_json(nlohmann::json& j, const BackboneConfig& c);
void from_json(const nlohmann::json& j, BackboneConfig& c);
}  // namespace nn

/// Raw head output per scale: channels are anchor-major blocks of
/// (tx, ty, tw, th, objectness, class logits...).
template <typename Scalar>
using HeadOutputs = std::vector<nn::FeatureMap<Scalar>>;

struct RawDetection {
  BBox box;
  double confidence{0.0};
  GridCoord cell;
  int anchor_index{0};
  std::vector<double> class_probs;  // empty for the class-agnostic localizer
};

/// x = (j + sigmoid(tx)) / cols, y = (i + sigmoid(ty)) / rows,
/// w = prior.w * exp(tw), h = prior.h * exp(th).
BBox decode_anchor_box(double tx, double ty, double tw, double th, const GridCoord& cell,
                       GridShape grid, const AnchorPrior& prior);

/// Inverse of decode_anchor_box; the fractional cell offsets are clamped into
/// (0, 1) before the logit.
std::array<double, 4> encode_anchor_box(const BBox& box, const GridCoord& cell, GridShape grid,
                                        const AnchorPrior& prior);

template <typename Scalar>
std::vector<RawDetection> predict_boxes(const HeadOutputs<Scalar>& outputs,
                                        const DetectorConfig& config);

/// Greedy non-maximum suppression in descending confidence (ties keep input order).
std::vector<RawDetection> non_max_suppression(std::vector<RawDetection> detections,
                                              double iou_threshold);

/// Detections with confidence strictly above `epsilon`, order preserved.
std::vector<RawDetection> filter_confidence(std::span<const RawDetection> detections,
                                            double epsilon);

/// filter_confidence followed by non_max_suppression.
std::vector<RawDetection> cull(std::span<const RawDetection> detections, double epsilon,
                               double nms_iou);

struct LocalizationTarget {
  BBox box;
  int cls{0};  // used only when the config has class logits
};

struct DetectionLoss {
  double regression{0.0};      // L1
  double confidence{0.0};      // L2, unweighted
  double classification{0.0};  // joint baseline only
  double total{0.0};           // L1 + lambda * L2 (+ classification)
};

/// Anchor-based localization loss. Each target is assigned to the cell holding
/// its center at the (scale, anchor) whose centered prior has maximum IoU with
/// it. Regression is squared error on sigmoid(tx), sigmoid(ty) against the
/// fractional offsets and on tw, th against log(size / prior); confidence is
/// binary cross-entropy with target 1 at assigned anchors and 0 elsewhere,
/// skipping unassigned predictions whose decoded box has IoU > ignore_iou with
/// a target. When `grads` is given it receives d(total)/d(outputs).
/// Throws std::invalid_argument for a target with zero area.
template <typename Scalar>
DetectionLoss localization_loss(const HeadOutputs<Scalar>& outputs,
                                std::span<const LocalizationTarget> targets,
                                const DetectorConfig& config, HeadOutputs<Scalar>* grads = nullptr);

class LabelDetector {
 public:
  explicit LabelDetector(DetectorConfig config, std::uint64_t seed = 0);

  const DetectorConfig& config() const { return config_; }

  FeatureGrid<float> extract_features(const Image& image, const BinaryMask* mask = nullptr) const;
  HeadOutputs<float> heads(const FeatureGrid<float>& features) const;
  /// One RawDetection per (cell, anchor), before culling.
  std::vector<RawDetection> predict(const Image& image) const;
  /// predict followed by cull at the configured epsilon and NMS threshold.
  std::vector<RawDetection> detect(const Image& image) const;

  /// Forward/backward for one preprocessed input; accumulates parameter gradients.
  DetectionLoss accumulate_gradients(const nn::FeatureMap<float>& input,
                                     std::span<const LocalizationTarget> targets);
  nn::ParameterList<float> parameters();

  void save(const std::filesystem::path& path) const;
  static LabelDetector load(const std::filesystem::path& path);
  /// Throws CheckpointError if the stored config differs from `expected`.
  static LabelDetector load(const std::filesystem::path& path, const DetectorConfig& expected);

  static constexpr const char* kModelKind = "label-detector";

 private:
  DetectorConfig config_;
  nn::Backbone<float> backbone_;
  std::vector<nn::Conv2d<float>> heads_;
};

/// Class-agnostic targets (or class-aware ones for the joint baseline) from a record.
std::vector<LocalizationTarget> label_targets(const FigureRecord& record, bool with_classes);

struct LocalizerTraining {
  LabelDetector model;
  TrainingLog log;
};

/// Minimizes L1 + lambda * L2 over the corpus label boxes, each figure
/// augmented afresh per visit. Throws std::invalid_argument on an empty corpus
/// and TrainingDivergence on a non-finite loss.
LocalizerTraining train_localizer(std::span<const FigureRecord> corpus, const DetectorConfig& config,
                                  const TrainingSchedule& schedule, const AugmentOptions& augment = {});

/// Converts joint-baseline detections to labeled boxes: class = argmax of the
/// class probabilities, confidence = objectness * class probability.
std::vector<LabeledBox> joint_labeled_boxes(std::span<const RawDetection> detections);

}  // namespace figsep
