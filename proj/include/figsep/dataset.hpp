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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "figsep/geometry.hpp"
#include "figsep/image.hpp"

namespace figsep {

/// Subfigure label category. Id 0 is reserved for background.
struct LabelClass {
  int id{0};
  std::string glyph;
  std::vector<std::string> variants;  // alternative typography for the same index
  bool operator==(const LabelClass&) const = default;
};

class Alphabet {
 public:
  Alphabet() = default;
  /// Ids must be contiguous from 1 and glyphs unique.
  explicit Alphabet(std::vector<LabelClass> classes);

  /// "a" through "i", with "A" and "(a)" style variants.
  static Alphabet lowercase(int count = 9);

  int size() const { return static_cast<int>(classes_.size()); }
  bool empty() const { return classes_.empty(); }
  const LabelClass& at(int id) const;
  const std::string& glyph(int id) const { return at(id).glyph; }
  /// Class id for a glyph or one of its variants.
  std::optional<int> find(std::string_view glyph) const;
  const std::vector<LabelClass>& classes() const { return classes_; }
  bool operator==(const Alphabet&) const = default;

 private:
  std::vector<LabelClass> classes_;
};

struct LabeledBox {
  BBox box;
  int cls{0};
  double confidence{1.0};
  bool operator==(const LabeledBox&) const = default;
};

struct SubfigureBox {
  BBox box;
  int cls{0};
  bool operator==(const SubfigureBox&) const = default;
};

struct FigureRecord {
  std::string image_id;
  Image image;
  std::vector<LabeledBox> label_boxes;
  std::vector<SubfigureBox> subfig_boxes;
  bool operator==(const FigureRecord&) const = default;
};

class CorpusError : public std::runtime_error {
 public:
  enum class Kind { kMissingImage, kMalformedAnnotation, kDanglingLabel, kUnknownClass,
                    kInvalidRecord, kIo };

  CorpusError(Kind kind, std::string record_id, const std::string& what)
      : std::runtime_error(record_id.empty() ? what : record_id + ": " + what),
        kind_(kind),
        record_id_(std::move(record_id)) {}

  Kind kind() const { return kind_; }
  const std::string& record_id() const { return record_id_; }

 private:
  Kind kind_;
  std::string record_id_;
};

/// Checks the record invariants: positive box extents, unique label classes,
/// every subfigure class present among the labels, and each label box inside
/// its subfigure box after clipping (within `tolerance`). Throws CorpusError.
void validate_record(const FigureRecord& record, double tolerance = 1e-9);

/// Reads `images/<id>.png` and `annotations.jsonl` from `dir`. A missing
/// directory or index is an empty corpus.
std::vector<FigureRecord> load_corpus(const std::filesystem::path& dir, const Alphabet& alphabet);

/// Writes images losslessly plus the annotation index; creates `dir` as needed.
void save_corpus(std::span<const FigureRecord> records, const std::filesystem::path& dir,
                 const Alphabet& alphabet);

// ---------------------------------------------------------------------------
// Synthetic data

enum class LabelPosition { kCorner, kAbove, kBelow };

std::string_view to_string(LabelPosition p);
LabelPosition label_position_from_string(std::string_view s);

struct SyntheticLayoutSpec {
  int rows{1};
  int cols{1};
  double jitter{0.1};
  int n_subfigures{1};
  LabelPosition label_position{LabelPosition::kCorner};
  Alphabet alphabet{Alphabet::lowercase()};
  /// Class ids assigned to panels in reading order; empty means 1..n.
  std::vector<int> classes;
  int width{256};
  int height{256};
  int glyph_min_px{11};
  int glyph_max_px{16};
  /// Probability of rendering a typographic variant instead of the primary glyph.
  double variant_prob{0.0};
  std::string image_id;  // empty: "fig_<seed>"
};

/// Deterministic compound figure with exact label and subfigure ground truth.
/// Throws std::invalid_argument if the alphabet cannot cover n_subfigures.
FigureRecord generate_synthetic_figure(const SyntheticLayoutSpec& spec, std::uint64_t seed);

struct ImbalanceProfile {
  std::vector<double> weights;  // weights[k] belongs to class id k+1

  /// Monotone decreasing a..i profile shaped like published label frequencies.
  static ImbalanceProfile figure_label_default(int count = 9);
  static ImbalanceProfile uniform(int count);
};

/// n class ids drawn with probability proportional to the profile weights.
std::vector<int> sample_imbalanced(const ImbalanceProfile& profile, int n, std::uint64_t seed);

/// Corpus-level layout distribution.
struct CorpusSpec {
  int min_rows{1}, max_rows{3};
  int min_cols{1}, max_cols{3};
  int min_size{224}, max_size{288};
  double full_grid_prob{0.75};
  double jitter{0.1};
  double corner_prob{0.6};
  double above_prob{0.2};  // remainder is below
  int max_subfigures{9};
  /// Per-class weights used to pick which labels a figure carries.
  ImbalanceProfile profile{ImbalanceProfile::uniform(9)};
  Alphabet alphabet{Alphabet::lowercase()};
  double variant_prob{0.0};
};

/// `count` figures with ids "<prefix><index>", each drawn from a seed derived from (seed, index).
std::vector<FigureRecord> generate_corpus(const CorpusSpec& spec, int count, std::uint64_t seed,
                                          const std::string& prefix = "fig_");

struct LabelPatch {
  Image raster;
  int cls{0};  // 0 = background
};

struct PatchOptions {
  double p_bg{0.5};
  std::vector<double> class_weights;  // empty: uniform over the alphabet
  int patch_size{32};
  double padding{0.15};
  int glyph_min_px{11};
  int glyph_max_px{16};
  double variant_prob{0.0};
};

/// Crops a random background region from a random figure and, unless it draws
/// background, pastes a randomly styled glyph; the result is framed the same
/// way `crop_square_patch` frames a detected label.
LabelPatch generate_label_patch(std::span<const FigureRecord> corpus, const Alphabet& alphabet,
                                std::uint64_t seed, const PatchOptions& options = {});

/// Square crop around the box, side = max(w, h) * (1 + 2 * padding) in pixels,
/// clipped to the image, resampled to size x size. Throws std::invalid_argument
/// when the box does not overlap the image.
Image crop_square_patch(const Image& image, const BBox& box, double padding, int size);

/// Renders a label glyph at (top, left) in pixels and returns its normalized
/// ink box padded by one pixel.
BBox stamp_label(Image& image, std::string_view text, int face, int height_px, Rgb color,
                 int top, int left, bool backing_box);

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentOptions {
  bool enabled{true};
  double min_scale{0.8};
  double max_scale{1.25};
  double contrast_jitter{0.2};
  double brightness_jitter{20.0};
};

/// Random zoom and translation at the original resolution followed by a
/// contrast/brightness change. Uncovered pixels are white. Windows that would
/// cut a label are rejected; after eight rejections the geometry is left
/// unchanged. Subfigure boxes are clipped to the image.
FigureRecord augment_figure(const FigureRecord& record, std::uint64_t seed,
                            const AugmentOptions& options = {});

}  // namespace figsep
