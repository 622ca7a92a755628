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
#include <string>
#include <vector>

#include "figsep/dataset.hpp"
#include "figsep/features.hpp"
#include "figsep/geometry.hpp"
#include "figsep/label_detector.hpp"
#include "figsep/nn/backbone.hpp"
#include "figsep/nn/layers.hpp"
#include "figsep/training.hpp"
#include "json.hpp"

namespace figsep {

/// How the feature vectors under a label box are reduced to one head input.
enum class AnchorAggregation { kCenterCell, kAverage };

/// Label-guided subfigure detector. The backbone sees RGB plus the label mask
/// and emits a single scale; the head predicts (tx, ty, tw, th, objectness)
/// per cell with x = (j + 0.5 + tx) / cols and w = prior.w * exp(tw).
struct SubfigureConfig {
  int input_size{416};
  nn::BackboneConfig backbone{4, {32, 64, 128, 256, 512}, 2, 128, {32}};
  AnchorPrior prior{0.4, 0.4};
  double lambda{1.0};
  double ignore_iou{0.7};
  double conf_threshold{0.25};
  bool latent_refinement{true};  // false: boxes come straight from the anchor cell
  bool shared_head{true};
  AnchorAggregation aggregation{AnchorAggregation::kCenterCell};

  void validate() const;
  static SubfigureConfig desk();
  bool operator==(const SubfigureConfig&) const = default;
};

void to_json(nlohmann::json& j, const SubfigureConfig& c);
void from_json(const nlohmann::json& j, SubfigureConfig& c);

/// Layout mask over the boxes of labels with class > 0 at resolution x resolution.
/// Throws std::invalid_argument for a background label.
BinaryMask build_mask(std::span<const LabeledBox> labels, int resolution);

struct AnchorSelection {
  LabeledBox label;
  std::vector<GridCoord> cells;  // cells_in_box(label.box)
  GridCoord representative;      // cell holding the label-box center
};

/// One selection per label with class > 0, in input order.
std::vector<AnchorSelection> select_anchor_features(GridShape grid, std::span<const LabeledBox> labels);

BBox decode_subfigure_box(double tx, double ty, double tw, double th, const GridCoord& cell,
                          GridShape grid, const AnchorPrior& prior);
std::array<double, 4> encode_subfigure_box(const BBox& box, const GridCoord& cell, GridShape grid,
                                           const AnchorPrior& prior);

struct RefinedDetection {
  LabeledBox label;
  BBox aux_box;
  double aux_conf{0.0};
  GridCoord anchor_cell;
  GridCoord latent_cell;
  BBox box;
  double confidence{0.0};
  bool degenerate{false};  // auxiliary box unusable; confidence forced to 0
};

/// Two-stage readout over head output maps (5 channels each): the auxiliary
/// box comes from the selection, the latent cell is the cell holding its
/// center (clamped to the image), and the final box is read there. Without
/// latent refinement the final box is the auxiliary one.
template <typename Scalar>
RefinedDetection refine(const nn::FeatureMap<Scalar>& outputs, const nn::FeatureMap<Scalar>& aux_outputs,
                        const AnchorSelection& selection, const SubfigureConfig& config);

struct SubfigureTarget {
  LabeledBox label;
  BBox subfigure;
};

/// Label/subfigure pairs joined by class. Subfigures without a label are
/// skipped with a warning on stderr.
std::vector<SubfigureTarget> subfigure_targets(const FigureRecord& record);

struct SubfigureLoss {
  double center{0.0};      // L4
  double regression{0.0};  // L1
  double confidence{0.0};  // L2, unweighted
  double total{0.0};       // L4 + L1 + lambda * L2
};

/// Training loss over head outputs. L4 is the squared distance, in cell units,
/// between the auxiliary center and the subfigure center; L1 is squared error
/// on (tx, ty, tw, th) at the latent cell; L2 is binary cross-entropy with
/// target 1 at latent cells and 0 elsewhere, skipping cells whose decoded box
/// has IoU > ignore_iou with a subfigure. The latent cell lookup is not
/// differentiated. With a shared head pass the same map (and gradient) twice.
template <typename Scalar>
SubfigureLoss subfigure_loss(const nn::FeatureMap<Scalar>& outputs, const nn::FeatureMap<Scalar>& aux_outputs,
                             std::span<const SubfigureTarget> targets, const SubfigureConfig& config,
                             nn::FeatureMap<Scalar>* grad = nullptr,
                             nn::FeatureMap<Scalar>* aux_grad = nullptr);

struct SubfigureDetection {
  int cls{0};
  double confidence{0.0};
  BBox box;
  BBox label_box;
  bool operator==(const SubfigureDetection&) const = default;
};

struct DetectionResult {
  std::string image_id;
  std::vector<SubfigureDetection> subfigures;
  bool operator==(const DetectionResult&) const = default;
};

nlohmann::json result_to_json(const DetectionResult& result, const Alphabet& alphabet);
/// Throws CorpusError on malformed input or an unknown class.
DetectionResult result_from_json(const nlohmann::json& j, const Alphabet& alphabet);

class SubfigureDetector {
 public:
  explicit SubfigureDetector(SubfigureConfig config, std::uint64_t seed = 0);

  const SubfigureConfig& config() const { return config_; }

  nn::FeatureMap<float> input_tensor(const Image& image, std::span<const LabeledBox> labels) const;
  FeatureGrid<float> extract_features(const nn::FeatureMap<float>& input) const;
  /// One refined detection per label with class > 0, in input order.
  std::vector<RefinedDetection> refine_all(const Image& image, std::span<const LabeledBox> labels) const;
  /// refine_all followed by the confidence filter.
  DetectionResult detect(const std::string& image_id, const Image& image,
                         std::span<const LabeledBox> labels) const;

  SubfigureLoss accumulate_gradients(const nn::FeatureMap<float>& input,
                                     std::span<const SubfigureTarget> targets);
  nn::ParameterList<float> parameters();
  /// First-layer weights; columns [27, 36) act on the mask channel.
  nn::Parameter<float>& input_weights() { return backbone_.input_weights(); }

  void save(const std::filesystem::path& path) const;
  static SubfigureDetector load(const std::filesystem::path& path);
  /// Throws CheckpointError if the stored config differs from `expected`.
  static SubfigureDetector load(const std::filesystem::path& path, const SubfigureConfig& expected);

  static constexpr const char* kModelKind = "subfigure-detector";

 private:
  std::pair<nn::FeatureMap<float>, nn::FeatureMap<float>> heads(const FeatureGrid<float>& f) const;

  SubfigureConfig config_;
  nn::Backbone<float> backbone_;
  nn::Conv2d<float> head_;
  nn::Conv2d<float> aux_head_;  // used only without a shared head
};

struct SubfigureTraining {
  SubfigureDetector model;
  TrainingLog log;
};

/// Minimizes L4 + L1 + lambda * L2 with ground-truth labels driving the mask
/// and the anchor selection.
SubfigureTraining train_subfigure_detector(std::span<const FigureRecord> corpus,
                                           const SubfigureConfig& config,
                                           const TrainingSchedule& schedule,
                                           const AugmentOptions& augment = {});

}  // namespace figsep
