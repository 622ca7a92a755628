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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "figsep/dataset.hpp"
#include "figsep/label_detector.hpp"
#include "figsep/nn/layers.hpp"
#include "figsep/training.hpp"
#include "json.hpp"

namespace figsep {

struct PatchSample {
  Image raster;
  int target{0};  // class id, 0 = background
};

/// Patch classifier: `depth` 3x3 convolutions per stage, every stage after the
/// first halving the resolution, then global pooling and a linear layer over
/// background plus the alphabet.
struct ClassifierConfig {
  int input_size{64};
  int num_classes{10};  // alphabet size + 1
  std::vector<int> widths{8, 16, 32, 64};
  int depth{2};
  double padding{0.15};

  void validate() const;
  static ClassifierConfig desk(int alphabet_size = 9);
  bool operator==(const ClassifierConfig&) const = default;
};

void to_json(nlohmann::json& j, const ClassifierConfig& c);
void from_json(const nlohmann::json& j, ClassifierConfig& c);

struct Classification {
  int cls{0};
  std::vector<double> probs;
};

/// Softmax cross-entropy of `logits` against class `target`; writes
/// d(loss)/d(logits) into `grad` when given.
template <typename Scalar>
Scalar cross_entropy(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& logits, int target,
                     Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* grad = nullptr);

/// Square crop of the padded box resampled to the classifier input size.
Image crop_patch(const Image& image, const BBox& box, const ClassifierConfig& config);

class LabelClassifier {
 public:
  explicit LabelClassifier(ClassifierConfig config, std::uint64_t seed = 0);

  const ClassifierConfig& config() const { return config_; }

  /// Throws std::invalid_argument unless the patch is input_size square.
  Eigen::VectorXf logits(const Image& patch) const;
  Classification classify(const Image& patch) const;

  /// Forward/backward for one patch; accumulates parameter gradients and
  /// returns the cross-entropy.
  double accumulate_gradients(const Image& patch, int target);
  nn::ParameterList<float> parameters();

  void save(const std::filesystem::path& path) const;
  static LabelClassifier load(const std::filesystem::path& path);
  /// Throws CheckpointError if the stored config differs from `expected`.
  static LabelClassifier load(const std::filesystem::path& path, const ClassifierConfig& expected);

  static constexpr const char* kModelKind = "label-classifier";

 private:
  struct Tape {
    std::vector<nn::Conv2d<float>::Cache> convs;
    int pooled_height{0};
    int pooled_width{0};
    nn::Conv2d<float>::Cache fc;
  };
  Eigen::VectorXf forward(const nn::FeatureMap<float>& input, Tape* tape) const;

  ClassifierConfig config_;
  std::vector<nn::Conv2d<float>> convs_;
  nn::Conv2d<float> fc_;
};

/// Patches around ground-truth labels, each box perturbed like an upstream
/// detection, plus the same number of background crops of label size that
/// avoid every label. `copies` perturbed crops are taken per label.
std::vector<PatchSample> real_label_patches(std::span<const FigureRecord> corpus,
                                            const ClassifierConfig& config, std::uint64_t seed,
                                            int copies = 2);

/// Synthetic patch for a stream position.
using PatchStream = std::function<PatchSample(std::uint64_t index)>;

/// Stream over generate_label_patch with patch size and padding taken from `config`.
PatchStream synthetic_patch_stream(std::span<const FigureRecord> backgrounds, const Alphabet& alphabet,
                                   const ClassifierConfig& config, std::uint64_t seed,
                                   PatchOptions options = {});

struct MixRatio {
  double real{1.0};
  double synthetic{1.0};
};

struct ClassifierTraining {
  LabelClassifier model;
  TrainingLog log;
};

/// Minimizes cross-entropy; each batch holds round(batch * real share) real
/// patches and synthetic patches for the rest. Throws std::invalid_argument
/// when the ratio asks for a source that is empty or both shares are zero.
ClassifierTraining train_classifier(std::span<const PatchSample> real, const PatchStream& synthetic,
                                    MixRatio ratio, const ClassifierConfig& config,
                                    const TrainingSchedule& schedule);

/// Classifies the crop of every detection with confidence above `epsilon`,
/// drops background, and keeps one detection per class (highest score).
/// The score is the detection confidence times the class probability.
std::vector<LabeledBox> annotate_detections(const Image& image, std::span<const RawDetection> detections,
                                            const LabelClassifier& classifier, double epsilon);

}  // namespace figsep
