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

#include "figsep/subfigure_detector.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>

#include "figsep/checkpoint.hpp"
#include "figsep/nn/math.hpp"
#include "figsep/nn/serialize.hpp"
#include "figsep/random.hpp"

namespace figsep {

using nlohmann::json;
using nn::sigmoid;
using nn::softplus;

void SubfigureConfig::validate() const {
  if (backbone.in_channels != 4) throw std::invalid_argument("SubfigureConfig: backbone needs 4 input channels");
  if (backbone.out_strides.size() != 1)
    throw std::invalid_argument("SubfigureConfig: exactly one output stride");
  if (input_size < backbone.max_stride() || input_size % backbone.max_stride() != 0)
    throw std::invalid_argument("SubfigureConfig: input_size must be a multiple of the coarsest stride");
  if (!(prior.w > 0.0 && prior.h > 0.0)) throw std::invalid_argument("SubfigureConfig: prior must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("SubfigureConfig: lambda must be > 0");
  if (!(conf_threshold >= 0.0 && conf_threshold < 1.0))
    throw std::invalid_argument("SubfigureConfig: conf_threshold must lie in [0,1)");
}

SubfigureConfig SubfigureConfig::desk() {
  SubfigureConfig c;
  c.input_size = 128;
  c.backbone = nn::BackboneConfig{4, {8, 16, 32, 64, 64}, 1, 32, {8}};
  return c;
}

void to_json(json& j, const SubfigureConfig& c) {
  j = json{{"input_size", c.input_size},
           {"backbone", c.backbone},
           {"prior", {c.prior.w, c.prior.h}},
           {"lambda", c.lambda},
           {"ignore_iou", c.ignore_iou},
           {"conf_threshold", c.conf_threshold},
           {"latent_refinement", c.latent_refinement},
           {"shared_head", c.shared_head},
           {"aggregation", c.aggregation == AnchorAggregation::kAverage ? "average" : "center"}};
}

void from_json(const json& j, SubfigureConfig& c) {
  c.input_size = j.value("input_size", c.input_size);
  if (j.contains("backbone")) c.backbone = j["backbone"].get<nn::BackboneConfig>();
  if (j.contains("prior")) {
    const auto p = j["prior"].get<std::vector<double>>();
    if (p.size() != 2) throw std::invalid_argument("SubfigureConfig: prior must be [w, h]");
    c.prior = {p[0], p[1]};
  }
  c.lambda = j.value("lambda", c.lambda);
  c.ignore_iou = j.value("ignore_iou", c.ignore_iou);
  c.conf_threshold = j.value("conf_threshold", c.conf_threshold);
  c.latent_refinement = j.value("latent_refinement", c.latent_refinement);
  c.shared_head = j.value("shared_head", c.shared_head);
  const std::string agg = j.value("aggregation", std::string("center"));
  if (agg == "center")
    c.aggregation = AnchorAggregation::kCenterCell;
  else if (agg == "average")
    c.aggregation = AnchorAggregation::kAverage;
  else
    throw std::invalid_argument("SubfigureConfig: unknown aggregation '" + agg + "'");
}

BinaryMask build_mask(std::span<const LabeledBox> labels, int resolution) {
  std::vector<BBox> boxes;
  for (const auto& l : labels) {
    if (l.cls <= 0) throw std::invalid_argument("build_mask: background label");
    boxes.push_back(l.box);
  }
  return rasterize_mask(boxes, resolution, resolution);
}

std::vector<AnchorSelection> select_anchor_features(GridShape grid, std::span<const LabeledBox> labels) {
  std::vector<AnchorSelection> out;
  for (const auto& l : labels) {
    if (l.cls <= 0) continue;
    out.push_back({l, cells_in_box(l.box, grid), center_cell(l.box, grid)});
  }
  return out;
}

BBox decode_subfigure_box(double tx, double ty, double tw, double th, const GridCoord& cell,
                          GridShape grid, const AnchorPrior& prior) {
  return BBox{(cell.j + 0.5 + tx) / grid.cols, (cell.i + 0.5 + ty) / grid.rows, prior.w * std::exp(tw),
              prior.h * std::exp(th)};
}

std::array<double, 4> encode_subfigure_box(const BBox& box, const GridCoord& cell, GridShape grid,
                                           const AnchorPrior& prior) {
  return {box.x * grid.cols - cell.j - 0.5, box.y * grid.rows - cell.i - 0.5, std::log(box.w / prior.w),
          std::log(box.h / prior.h)};
}

// ---------------------------------------------------------------------------
// Readout

namespace {

/// Head output averaged over `cells`, decoded relative to `ref`.
struct Readout {
  GridCoord ref;
  std::vector<GridCoord> cells;
};

template <typename Scalar>
std::array<Scalar, 5> read(const nn::FeatureMap<Scalar>& m, const Readout& r) {
  std::array<Scalar, 5> v{};
  for (const auto& c : r.cells)
    for (int k = 0; k < 5; ++k) v[k] += m.at(k, c.i, c.j);
  for (auto& x : v) x /= static_cast<Scalar>(r.cells.size());
  return v;
}

template <typename Scalar>
void scatter(nn::FeatureMap<Scalar>* g, const Readout& r, const std::array<Scalar, 5>& d) {
  if (!g) return;
  const Scalar n = static_cast<Scalar>(r.cells.size());
  for (const auto& c : r.cells)
    for (int k = 0; k < 5; ++k) g->at(k, c.i, c.j) += d[k] / n;
}

Readout anchor_readout(const AnchorSelection& s, const SubfigureConfig& config) {
  if (config.aggregation == AnchorAggregation::kAverage) return {s.representative, s.cells};
  return {s.representative, {s.representative}};
}

template <typename Scalar>
BBox decode(const std::array<Scalar, 5>& v, const GridCoord& cell, GridShape grid, const AnchorPrior& prior) {
  return decode_subfigure_box(static_cast<double>(v[0]), static_cast<double>(v[1]),
                              static_cast<double>(v[2]), static_cast<double>(v[3]), cell, grid, prior);
}

bool usable(const BBox& b) {
  return std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) && std::isfinite(b.h) &&
         b.w > 1e-9 && b.h > 1e-9;
}

GridCoord latent_cell_of(double x, double y, GridShape grid) {
  return grid_cell_of(std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0), grid);
}

}  // namespace

template <typename Scalar>
RefinedDetection refine(const nn::FeatureMap<Scalar>& outputs, const nn::FeatureMap<Scalar>& aux_outputs,
                        const AnchorSelection& selection, const SubfigureConfig& config) {
  const GridShape grid{outputs.height, outputs.width};
  const Readout r1 = anchor_readout(selection, config);
  const auto a = read(aux_outputs, r1);
  RefinedDetection d;
  d.label = selection.label;
  d.anchor_cell = r1.ref;
  d.aux_box = decode(a, r1.ref, grid, config.prior);
  d.aux_conf = sigmoid(static_cast<double>(a[4]));
  d.latent_cell = r1.ref;
  d.box = d.aux_box;
  d.confidence = d.aux_conf;
  if (!usable(d.aux_box)) {
    d.degenerate = true;
    d.confidence = 0.0;
    return d;
  }
  if (!config.latent_refinement) return d;
  d.latent_cell = latent_cell_of(d.aux_box.x, d.aux_box.y, grid);
  const auto b = read(outputs, Readout{d.latent_cell, {d.latent_cell}});
  d.box = decode(b, d.latent_cell, grid, config.prior);
  d.confidence = sigmoid(static_cast<double>(b[4]));
  return d;
}

template RefinedDetection refine<float>(const nn::FeatureMap<float>&, const nn::FeatureMap<float>&,
                                        const AnchorSelection&, const SubfigureConfig&);
template RefinedDetection refine<double>(const nn::FeatureMap<double>&, const nn::FeatureMap<double>&,
                                         const AnchorSelection&, const SubfigureConfig&);

std::vector<SubfigureTarget> subfigure_targets(const FigureRecord& record) {
  std::vector<SubfigureTarget> out;
  for (const auto& s : record.subfig_boxes) {
    const auto it = std::find_if(record.label_boxes.begin(), record.label_boxes.end(),
                                 [&](const LabeledBox& l) { return l.cls == s.cls; });
    if (it == record.label_boxes.end() || s.cls <= 0) {
      std::cerr << "warning: " << record.image_id << ": subfigure of class " << s.cls
                << " has no label; skipped\n";
      continue;
    }
    out.push_back({*it, s.box});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loss

template <typename Scalar>
SubfigureLoss subfigure_loss(const nn::FeatureMap<Scalar>& outputs, const nn::FeatureMap<Scalar>& aux_outputs,
                             std::span<const SubfigureTarget> targets, const SubfigureConfig& config,
                             nn::FeatureMap<Scalar>* grad, nn::FeatureMap<Scalar>* aux_grad) {
  if (outputs.channels != 5 || !outputs.same_shape(aux_outputs))
    throw std::invalid_argument("subfigure_loss: expected two 5-channel maps of equal shape");
  const GridShape grid{outputs.height, outputs.width};
  if (grad) *grad = nn::FeatureMap<Scalar>::zeros(5, grid.rows, grid.cols);
  if (aux_grad && aux_grad != grad) *aux_grad = nn::FeatureMap<Scalar>::zeros(5, grid.rows, grid.cols);
  // Without refinement the final prediction is the anchor readout itself.
  const nn::FeatureMap<Scalar>& final_map = config.latent_refinement ? outputs : aux_outputs;
  nn::FeatureMap<Scalar>* final_grad = config.latent_refinement ? grad : aux_grad;
  const Scalar lambda = static_cast<Scalar>(config.lambda);

  SubfigureLoss loss;
  std::vector<Readout> positives;
  std::vector<BBox> subfigures;
  for (const auto& t : targets) {
    if (!t.subfigure.valid()) throw std::invalid_argument("subfigure_loss: subfigure with zero area");
    const auto sel = select_anchor_features(grid, std::span<const LabeledBox>(&t.label, 1));
    if (sel.empty()) continue;
    subfigures.push_back(t.subfigure);
    const Readout r1 = anchor_readout(sel.front(), config);
    Readout r2 = r1;
    if (config.latent_refinement) {
      const auto a = read(aux_outputs, r1);
      const Scalar gx = static_cast<Scalar>(t.subfigure.x * grid.cols);
      const Scalar gy = static_cast<Scalar>(t.subfigure.y * grid.rows);
      const Scalar dx = static_cast<Scalar>(r1.ref.j + 0.5) + a[0] - gx;
      const Scalar dy = static_cast<Scalar>(r1.ref.i + 0.5) + a[1] - gy;
      loss.center += static_cast<double>(dx * dx + dy * dy);
      scatter(aux_grad, r1, {Scalar(2) * dx, Scalar(2) * dy, Scalar(0), Scalar(0), Scalar(0)});
      const double ax = (r1.ref.j + 0.5 + static_cast<double>(a[0])) / grid.cols;
      const double ay = (r1.ref.i + 0.5 + static_cast<double>(a[1])) / grid.rows;
      const GridCoord latent = (std::isfinite(ax) && std::isfinite(ay)) ? latent_cell_of(ax, ay, grid) : r1.ref;
      r2 = Readout{latent, {latent}};
    }
    const auto enc = encode_subfigure_box(t.subfigure, r2.ref, grid, config.prior);
    const auto b = read(final_map, r2);
    std::array<Scalar, 5> d{};
    for (int k = 0; k < 4; ++k) {
      const Scalar diff = b[k] - static_cast<Scalar>(enc[k]);
      loss.regression += static_cast<double>(diff * diff);
      d[k] = Scalar(2) * diff;
    }
    const Scalar z = b[4];
    loss.confidence += static_cast<double>(softplus(-z));
    d[4] = lambda * (sigmoid(z) - Scalar(1));
    scatter(final_grad, r2, d);
    positives.push_back(std::move(r2));
  }

  std::vector<char> is_positive(static_cast<std::size_t>(grid.cells()), 0);
  for (const auto& r : positives)
    for (const auto& c : r.cells) is_positive[static_cast<std::size_t>(c.i * grid.cols + c.j)] = 1;
  for (int i = 0; i < grid.rows; ++i)
    for (int j = 0; j < grid.cols; ++j) {
      if (is_positive[static_cast<std::size_t>(i * grid.cols + j)]) continue;
      const GridCoord cell{i, j, 0};
      const auto v = read(final_map, Readout{cell, {cell}});
      const BBox box = decode(v, cell, grid, config.prior);
      if (usable(box)) {
        const bool ignored = std::any_of(subfigures.begin(), subfigures.end(), [&](const BBox& s) {
          return iou(box, s) > config.ignore_iou;
        });
        if (ignored) continue;
      }
      const Scalar z = v[4];
      loss.confidence += static_cast<double>(softplus(z));
      if (final_grad) final_grad->at(4, i, j) += lambda * sigmoid(z);
    }
  loss.total = loss.center + loss.regression + config.lambda * loss.confidence;
  return loss;
}

template SubfigureLoss subfigure_loss<float>(const nn::FeatureMap<float>&, const nn::FeatureMap<float>&,
                                             std::span<const SubfigureTarget>, const SubfigureConfig&,
                                             nn::FeatureMap<float>*, nn::FeatureMap<float>*);
template SubfigureLoss subfigure_loss<double>(const nn::FeatureMap<double>&, const nn::FeatureMap<double>&,
                                              std::span<const SubfigureTarget>, const SubfigureConfig&,
                                              nn::FeatureMap<double>*, nn::FeatureMap<double>*);

// ---------------------------------------------------------------------------
// Results

namespace {

json box_json(const BBox& b) { return json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

BBox box_from(const json& j) {
  return BBox{j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
}

}  // namespace

json result_to_json(const DetectionResult& result, const Alphabet& alphabet) {
  json j{{"image_id", result.image_id}, {"subfigures", json::array()}};
  for (const auto& s : result.subfigures)
    j["subfigures"].push_back(json{{"class", alphabet.glyph(s.cls)},
                                   {"conf", s.confidence},
                                   {"box", box_json(s.box)},
                                   {"label_box", box_json(s.label_box)}});
  return j;
}

DetectionResult result_from_json(const json& j, const Alphabet& alphabet) {
  DetectionResult r;
  try {
    r.image_id = j.at("image_id").get<std::string>();
    for (const auto& s : j.at("subfigures")) {
      const auto glyph = s.at("class").get<std::string>();
      const auto cls = alphabet.find(glyph);
      if (!cls) throw CorpusError(CorpusError::Kind::kUnknownClass, r.image_id, "unknown class '" + glyph + "'");
      r.subfigures.push_back({*cls, s.at("conf").get<double>(), box_from(s.at("box")), box_from(s.at("label_box"))});
    }
  } catch (const json::exception& e) {
    throw CorpusError(CorpusError::Kind::kMalformedAnnotation, r.image_id, e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Model

SubfigureDetector::SubfigureDetector(SubfigureConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(mix_seed(seed, 0x5FB));
  backbone_ = nn::Backbone<float>(config_.backbone);
  backbone_.init(rng);
  auto make_head = [&] {
    nn::Conv2d<float> h(backbone_.output_channels(), 5, 1, 1, nn::Activation::kNone);
    h.init(rng);
    h.weight.value *= 0.1f;
    h.bias.value(4, 0) = -4.0f;
    return h;
  };
  head_ = make_head();
  if (!config_.shared_head) aux_head_ = make_head();
}

nn::FeatureMap<float> SubfigureDetector::input_tensor(const Image& image,
                                                      std::span<const LabeledBox> labels) const {
  std::vector<LabeledBox> kept;
  for (const auto& l : labels)
    if (l.cls > 0) kept.push_back(l);
  const BinaryMask mask = build_mask(kept, config_.input_size);
  return image_tensor<float>(image, config_.input_size, 4, &mask);
}

FeatureGrid<float> SubfigureDetector::extract_features(const nn::FeatureMap<float>& input) const {
  return run_backbone(backbone_, input);
}

std::pair<nn::FeatureMap<float>, nn::FeatureMap<float>> SubfigureDetector::heads(const FeatureGrid<float>& f) const {
  auto out = head_.forward(f.scales.front());
  if (config_.shared_head) return {out, out};
  return {std::move(out), aux_head_.forward(f.scales.front())};
}

std::vector<RefinedDetection> SubfigureDetector::refine_all(const Image& image,
                                                            std::span<const LabeledBox> labels) const {
  const auto selections = [&] {
    const GridShape grid{config_.input_size / config_.backbone.out_strides.front(),
                         config_.input_size / config_.backbone.out_strides.front()};
    return select_anchor_features(grid, labels);
  }();
  if (selections.empty()) return {};
  const auto [out, aux] = heads(extract_features(input_tensor(image, labels)));
  std::vector<RefinedDetection> dets;
  for (const auto& s : selections) dets.push_back(refine(out, aux, s, config_));
  return dets;
}

DetectionResult SubfigureDetector::detect(const std::string& image_id, const Image& image,
                                          std::span<const LabeledBox> labels) const {
  DetectionResult r;
  r.image_id = image_id;
  for (const auto& d : refine_all(image, labels))
    if (!d.degenerate && d.confidence >= config_.conf_threshold)
      r.subfigures.push_back({d.label.cls, d.confidence, d.box, d.label.box});
  return r;
}

SubfigureLoss SubfigureDetector::accumulate_gradients(const nn::FeatureMap<float>& input,
                                                      std::span<const SubfigureTarget> targets) {
  nn::Backbone<float>::Tape tape;
  const auto features = backbone_.forward(input, &tape);
  nn::Conv2d<float>::Cache cache, aux_cache;
  const auto out = head_.forward(features.front(), &cache);
  nn::FeatureMap<float> g, ga;
  SubfigureLoss loss;
  nn::FeatureMap<float> dfeat;
  if (config_.shared_head) {
    loss = subfigure_loss<float>(out, out, targets, config_, &g, &g);
    dfeat = head_.backward(g, cache);
  } else {
    const auto aux = aux_head_.forward(features.front(), &aux_cache);
    loss = subfigure_loss<float>(out, aux, targets, config_, &g, &ga);
    dfeat = head_.backward(g, cache);
    dfeat.data += aux_head_.backward(ga, aux_cache).data;
  }
  backbone_.backward({dfeat}, tape, false);
  return loss;
}

nn::ParameterList<float> SubfigureDetector::parameters() {
  nn::ParameterList<float> out = backbone_.parameters();
  for (auto* p : head_.parameters()) out.push_back(p);
  if (!config_.shared_head)
    for (auto* p : aux_head_.parameters()) out.push_back(p);
  return out;
}

void SubfigureDetector::save(const std::filesystem::path& path) const {
  auto& self = const_cast<SubfigureDetector&>(*this);
  write_checkpoint(path, kModelKind, json(config_),
                   [&](std::ostream& os) { nn::write_parameters(os, self.parameters()); });
}

SubfigureDetector SubfigureDetector::load(const std::filesystem::path& path) {
  std::optional<SubfigureDetector> model;
  read_checkpoint(path, kModelKind, [&](const CheckpointHeader& h, std::istream& is) {
    model.emplace(h.config.get<SubfigureConfig>());
    nn::read_parameters(is, model->parameters());
  });
  return std::move(*model);
}

SubfigureDetector SubfigureDetector::load(const std::filesystem::path& path, const SubfigureConfig& expected) {
  std::optional<SubfigureDetector> model;
  read_checkpoint(path, kModelKind, [&](const CheckpointHeader& h, std::istream& is) {
    if (h.config.get<SubfigureConfig>() != expected)
      throw CheckpointError("stored subfigure config does not match the requested config");
    model.emplace(expected);
    nn::read_parameters(is, model->parameters());
  });
  return std::move(*model);
}

SubfigureTraining train_subfigure_detector(std::span<const FigureRecord> corpus,
                                           const SubfigureConfig& config,
                                           const TrainingSchedule& schedule,
                                           const AugmentOptions& augment) {
  if (corpus.empty()) throw std::invalid_argument("train_subfigure_detector: empty corpus");
  SubfigureDetector model(config, schedule.seed);
  std::vector<nn::FeatureMap<float>> inputs;
  std::vector<std::vector<SubfigureTarget>> targets;
  if (!augment.enabled)
    for (const auto& r : corpus) {
      inputs.push_back(model.input_tensor(r.image, r.label_boxes));
      targets.push_back(subfigure_targets(r));
    }
  std::uint64_t calls = 0;
  TrainingLog log = run_training(model.parameters(), corpus.size(), schedule,
                                 {"total", "l4_center", "l1_regression", "lambda_l2_confidence"},
                                 [&](std::size_t k) {
    SubfigureLoss l;
    if (augment.enabled) {
      const FigureRecord r = augment_figure(corpus[k], mix_seed(schedule.seed, calls++), augment);
      l = model.accumulate_gradients(model.input_tensor(r.image, r.label_boxes), subfigure_targets(r));
    } else {
      l = model.accumulate_gradients(inputs[k], targets[k]);
    }
    return std::vector<double>{l.total, l.center, l.regression, config.lambda * l.confidence};
  });
  return {std::move(model), std::move(log)};
}

}  // namespace figsep
