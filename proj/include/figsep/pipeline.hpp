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
#include <span>
#include <string>
#include <vector>

#include "figsep/dataset.hpp"
#include "figsep/evaluation.hpp"
#include "figsep/label_classifier.hpp"
#include "figsep/label_detector.hpp"
#include "figsep/subfigure_detector.hpp"
#include "figsep/training.hpp"
#include "json.hpp"

namespace figsep {

struct PipelinePaths {
  std::filesystem::path train_corpus{"corpus/train"};
  std::filesystem::path test_corpus{"corpus/test"};
  std::filesystem::path checkpoints{"checkpoints"};
  std::filesystem::path outputs{"outputs"};

  /// Relative paths are taken against `base`.
  PipelinePaths resolved(const std::filesystem::path& base) const;
  bool operator==(const PipelinePaths&) const = default;
};

/// Imbalanced corpus for the decoupling comparison: the listed classes are
/// drawn with `rare_weight` relative to the others.
struct DecouplingFixture {
  std::vector<int> rare_classes{7, 8};
  double rare_weight{0.085};
  int max_subfigures{6};
  bool operator==(const DecouplingFixture&) const = default;
};

/// Everything a run depends on. Stage seeds are derived from `seed`.
struct PipelineConfig {
  PipelinePaths paths;
  std::uint64_t seed{0};
  int alphabet_size{9};
  int n_train{300};
  int n_test{100};
  CorpusSpec corpus;
  DetectorConfig detector;
  ClassifierConfig classifier;
  SubfigureConfig subfigure;
  TrainingSchedule localizer_schedule;
  TrainingSchedule classifier_schedule;
  TrainingSchedule subfigure_schedule;
  AugmentOptions augment;
  MixRatio mix;
  int real_copies{2};
  PatchOptions patches;
  DecouplingFixture decoupling;

  Alphabet alphabet() const { return Alphabet::lowercase(alphabet_size); }
  /// Throws std::invalid_argument describing the first inconsistency.
  void validate() const;

  /// CPU preset sized for the 300/100 synthetic benchmark.
  static PipelineConfig desk();
  /// Minutes-scale preset for smoke runs and tests.
  static PipelineConfig toy();
};

void to_json(nlohmann::json& j, const TrainingSchedule& s);
void from_json(const nlohmann::json& j, TrainingSchedule& s);
void to_json(nlohmann::json& j, const AugmentOptions& a);
void from_json(const nlohmann::json& j, AugmentOptions& a);
void to_json(nlohmann::json& j, const PipelineConfig& c);
/// Missing keys keep the desk preset values.
void from_json(const nlohmann::json& j, PipelineConfig& c);

/// Reads a JSON config; relative paths resolve against the file's directory.
/// Throws std::invalid_argument on unreadable or invalid files.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

enum class Split { kTrain, kTest };

std::uint64_t corpus_seed(const PipelineConfig& config, Split split);
std::vector<FigureRecord> generate_split(const PipelineConfig& config, Split split);

LocalizerTraining train_label_detector_stage(std::span<const FigureRecord> corpus, const PipelineConfig& config);
ClassifierTraining train_label_classifier_stage(std::span<const FigureRecord> corpus,
                                                const PipelineConfig& config);
/// Trains on ground-truth labels only.
SubfigureTraining train_subfigure_stage(std::span<const FigureRecord> corpus, const PipelineConfig& config);

/// Labels and subfigures found in one image.
struct Separation {
  DetectionResult result;
  std::vector<LabeledBox> labels;
};

nlohmann::json separation_to_json(const Separation& s, const Alphabet& alphabet);
/// Throws CorpusError on malformed input.
Separation separation_from_json(const nlohmann::json& j, const Alphabet& alphabet);

/// The two-stage inference chain: localization, culling, classification,
/// then masked subfigure detection on the predicted labels.
class Separator {
 public:
  Separator(LabelDetector detector, LabelClassifier classifier, SubfigureDetector subfigures);

  std::vector<LabeledBox> labels(const Image& image) const;
  Separation separate(const std::string& image_id, const Image& image) const;
  /// Images processed in order on up to `jobs` threads; output order and values
  /// do not depend on `jobs`.
  std::vector<Separation> separate_all(std::span<const FigureRecord> records, int jobs = 1) const;

  const LabelDetector& detector() const { return detector_; }
  const LabelClassifier& classifier() const { return classifier_; }
  const SubfigureDetector& subfigure_detector() const { return subfigures_; }

 private:
  LabelDetector detector_;
  LabelClassifier classifier_;
  SubfigureDetector subfigures_;
};

/// Pixel content of a normalized box. Throws std::invalid_argument when the
/// box covers no pixel.
Image crop_region(const Image& image, const BBox& box);

/// Crop file name "<image_id>_<glyph>.png".
std::string crop_name(const std::string& image_id, int cls, const Alphabet& alphabet);

/// Joins separations to ground truth by image id. Throws CorpusError when an
/// image has no ground truth.
std::vector<ImageEval> subfigure_evals(std::span<const Separation> separations,
                                       std::span<const FigureRecord> truth);
std::vector<ImageEval> label_evals(std::span<const Separation> separations,
                                   std::span<const FigureRecord> truth);
SeparationReport evaluate_separations(std::span<const Separation> separations,
                                      std::span<const FigureRecord> truth);

/// Decoupled localizer plus classifier against a jointly trained detector,
/// scored on label detection over an imbalanced train corpus and a uniform
/// test corpus.
struct DecouplingAblation {
  AblationTable table;
  std::vector<int> rare_classes;
  double rare_gap{0.0};  // mean rare-class AP50, decoupled minus end-to-end
};
DecouplingAblation ablate_decoupling(const PipelineConfig& config);

/// Latent refinement against anchor-only readout at equal budget and seed,
/// both driven by ground-truth labels at test time.
struct LatentAblation {
  AblationTable table;
  double ap75_gap{0.0};
};
LatentAblation ablate_latent(std::span<const FigureRecord> train, std::span<const FigureRecord> test,
                             const PipelineConfig& config);

/// Subfigure evaluation with ground-truth labels driving the detector.
std::vector<ImageEval> subfigure_evals_with_gt_labels(const SubfigureDetector& model,
                                                      std::span<const FigureRecord> test);

/// {"tool": "figsep", "command": ..., "config": ...} plus `extra`.
nlohmann::json manifest(const std::string& command, const PipelineConfig& config,
                        const nlohmann::json& extra = nlohmann::json::object());

}  // namespace figsep
