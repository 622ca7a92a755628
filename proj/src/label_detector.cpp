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

#include "figsep/label_detector.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "figsep/checkpoint.hpp"
#include "figsep/nn/math.hpp"
#include "figsep/nn/serialize.hpp"
#include "figsep/random.hpp"

namespace figsep {

using nlohmann::json;

namespace nn {
void to_json(json& j, const BackboneConfig& c) {
  j = json{{"in_channels", c.in_channels}, {"widths", c.widths}, {"depth", c.depth},
           {"neck_width", c.neck_width}, {"out_strides", c.out_strides}};
}
void from_json(const json& j, BackboneConfig& c) {
  c.in_channels = j.value("in_channels", c.in_channels);
  c.widths = j.value("widths", c.widths);
  c.depth = j.value("depth", c.depth);
  c.neck_width = j.value("neck_width", c.neck_width);
  c.out_strides = j.value("out_strides", c.out_strides);
}
}  // namespace nn

void to_json(json& j, const AnchorSet& a) {
  j = json::array();
  for (const auto& scale : a.per_scale) {
    json s = json::array();
    for (const auto& p : scale) s.push_back({p.w, p.h});
    j.push_back(s);
  }
}

void from_json(const json& j, AnchorSet& a) {
  a.per_scale.clear();
  for (const auto& s : j) {
    std::vector<AnchorPrior> scale;
    for (const auto& p : s) scale.push_back(AnchorPrior{p.at(0).get<double>(), p.at(1).get<double>()});
    a.per_scale.push_back(std::move(scale));
  }
}

void to_json(json& j, const DetectorConfig& c) {
  j = json{{"input_size", c.input_size}, {"backbone", c.backbone},   {"anchors", c.anchors},
           {"conf_threshold", c.conf_threshold}, {"lambda", c.lambda}, {"nms_iou", c.nms_iou},
           {"ignore_iou", c.ignore_iou}, {"num_classes", c.num_classes}};
}

void from_json(const json& j, DetectorConfig& c) {
  c.input_size = j.value("input_size", c.input_size);
  if (j.contains("backbone")) c.backbone = j["backbone"].get<nn::BackboneConfig>();
  if (j.contains("anchors")) c.anchors = j["anchors"].get<AnchorSet>();
  c.conf_threshold = j.value("conf_threshold", c.conf_threshold);
  c.lambda = j.value("lambda", c.lambda);
  c.nms_iou = j.value("nms_iou", c.nms_iou);
  c.ignore_iou = j.value("ignore_iou", c.ignore_iou);
  c.num_classes = j.value("num_classes", c.num_classes);
}

void DetectorConfig::validate() const {
  if (!(conf_threshold > 0.0 && conf_threshold < 1.0))
    throw std::invalid_argument("DetectorConfig: conf_threshold must lie in (0,1)");
  if (!(lambda > 0.0)) throw std::invalid_argument("DetectorConfig: lambda must be > 0");
  if (input_size < backbone.max_stride() || input_size % backbone.max_stride() != 0)
    throw std::invalid_argument("DetectorConfig: input_size must be a multiple of the coarsest stride");
  if (anchors.per_scale.size() != backbone.out_strides.size())
    throw std::invalid_argument("DetectorConfig: need one anchor list per output stride");
  for (const auto& scale : anchors.per_scale) {
    if (scale.empty()) throw std::invalid_argument("DetectorConfig: every scale needs an anchor");
    for (const auto& p : scale)
      if (!(p.w > 0.0 && p.h > 0.0)) throw std::invalid_argument("DetectorConfig: anchor priors must be positive");
  }
  if (num_classes < 0) throw std::invalid_argument("DetectorConfig: num_classes must be >= 0");
  for (std::size_t k = 1; k < backbone.out_strides.size(); ++k)
    if (backbone.out_strides[k] <= backbone.out_strides[k - 1])
      throw std::invalid_argument("DetectorConfig: out_strides must be increasing");
}

DetectorConfig DetectorConfig::desk() {
  DetectorConfig c;
  c.input_size = 256;
  c.backbone = nn::BackboneConfig{3, {8, 16, 32, 64, 64}, 1, 32, {8, 16}};
  c.anchors = AnchorSet{{{{0.03, 0.055}, {0.055, 0.06}}, {{0.09, 0.07}, {0.14, 0.09}}}};
  return c;
}

// ---------------------------------------------------------------------------
// Box parameterization

namespace {

using nn::sigmoid;
using nn::softplus;

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

BBox decode_anchor_box(double tx, double ty, double tw, double th, const GridCoord& cell,
                       GridShape grid, const AnchorPrior& prior) {
  return BBox{(cell.j + sigmoid(tx)) / grid.cols, (cell.i + sigmoid(ty)) / grid.rows,
              prior.w * std::exp(tw), prior.h * std::exp(th)};
}

std::array<double, 4> encode_anchor_box(const BBox& box, const GridCoord& cell, GridShape grid,
                                        const AnchorPrior& prior) {
  constexpr double kEps = 1e-9;
  const double fx = std::clamp(box.x * grid.cols - cell.j, kEps, 1.0 - kEps);
  const double fy = std::clamp(box.y * grid.rows - cell.i, kEps, 1.0 - kEps);
  return {logit(fx), logit(fy), std::log(box.w / prior.w), std::log(box.h / prior.h)};
}

template <typename Scalar>
std::vector<RawDetection> predict_boxes(const HeadOutputs<Scalar>& outputs,
                                        const DetectorConfig& config) {
  std::vector<RawDetection> dets;
  const int C = config.channels_per_anchor();
  for (std::size_t s = 0; s < outputs.size(); ++s) {
    const auto& out = outputs[s];
    const GridShape grid{out.height, out.width};
    const int A = config.anchors.count(s);
    for (int i = 0; i < grid.rows; ++i)
      for (int j = 0; j < grid.cols; ++j) {
        const auto v = out.vector_at(i, j);
        for (int a = 0; a < A; ++a) {
          const int o = a * C;
          RawDetection d;
          d.cell = GridCoord{i, j, static_cast<int>(s)};
          d.anchor_index = a;
          d.box = decode_anchor_box(v(o), v(o + 1), v(o + 2), v(o + 3), d.cell, grid,
                                    config.anchors.per_scale[s][a]);
          d.confidence = sigmoid(static_cast<double>(v(o + 4)));
          if (config.num_classes > 0) {
            Eigen::VectorXd logits(config.num_classes);
            for (int k = 0; k < config.num_classes; ++k) logits(k) = static_cast<double>(v(o + 5 + k));
            const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
            const Eigen::VectorXd p = e / e.sum();
            d.class_probs.assign(p.data(), p.data() + p.size());
          }
          dets.push_back(std::move(d));
        }
      }
  }
  return dets;
}

template std::vector<RawDetection> predict_boxes(const HeadOutputs<float>&, const DetectorConfig&);
template std::vector<RawDetection> predict_boxes(const HeadOutputs<double>&, const DetectorConfig&);

std::vector<RawDetection> filter_confidence(std::span<const RawDetection> detections,
                                            double epsilon) {
  std::vector<RawDetection> out;
  for (const auto& d : detections)
    if (d.confidence > epsilon) out.push_back(d);
  return out;
}

std::vector<RawDetection> non_max_suppression(std::vector<RawDetection> detections,
                                              double iou_threshold) {
  std::stable_sort(detections.begin(), detections.end(),
                   [](const RawDetection& a, const RawDetection& b) { return a.confidence > b.confidence; });
  std::vector<RawDetection> kept;
  for (auto& d : detections) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const RawDetection& k) {
      return iou(k.box, d.box) > iou_threshold;
    });
    if (!suppressed) kept.push_back(std::move(d));
  }
  return kept;
}

std::vector<RawDetection> cull(std::span<const RawDetection> detections, double epsilon,
                               double nms_iou) {
  return non_max_suppression(filter_confidence(detections, epsilon), nms_iou);
}

// ---------------------------------------------------------------------------
// Loss

template <typename Scalar>
DetectionLoss localization_loss(const HeadOutputs<Scalar>& outputs,
                                std::span<const LocalizationTarget> targets,
                                const DetectorConfig& config, HeadOutputs<Scalar>* grads) {
  const int C = config.channels_per_anchor();
  for (const auto& t : targets)
    if (!t.box.valid()) throw std::invalid_argument("localization_loss: target with zero area");

  // (scale, i, j, anchor) -> target index; later targets win collisions.
  std::map<std::tuple<int, int, int, int>, std::size_t> assigned;
  for (std::size_t g = 0; g < targets.size(); ++g) {
    const BBox& b = targets[g].box;
    int best_s = 0, best_a = 0;
    double best = -1.0;
    for (std::size_t s = 0; s < outputs.size(); ++s)
      for (int a = 0; a < config.anchors.count(s); ++a) {
        const auto& p = config.anchors.per_scale[s][a];
        const double v = shape_iou(b.w, b.h, p.w, p.h);
        if (v > best) {
          best = v;
          best_s = static_cast<int>(s);
          best_a = a;
        }
      }
    const GridShape grid{outputs[best_s].height, outputs[best_s].width};
    const GridCoord cell = center_cell(b, grid, best_s);
    assigned[{best_s, cell.i, cell.j, best_a}] = g;
  }

  if (grads) {
    grads->clear();
    for (const auto& o : outputs) grads->push_back(nn::FeatureMap<Scalar>::zeros(o.channels, o.height, o.width));
  }

  DetectionLoss loss;
  for (std::size_t s = 0; s < outputs.size(); ++s) {
    const auto& out = outputs[s];
    const GridShape grid{out.height, out.width};
    const int A = config.anchors.count(s);
    for (int i = 0; i < grid.rows; ++i)
      for (int j = 0; j < grid.cols; ++j) {
        const Eigen::Index col = static_cast<Eigen::Index>(i) * grid.cols + j;
        for (int a = 0; a < A; ++a) {
          const int o = a * C;
          const auto& prior = config.anchors.per_scale[s][a];
          const Scalar to = out.data(o + 4, col);
          const auto it = assigned.find({static_cast<int>(s), i, j, a});
          if (it != assigned.end()) {
            const LocalizationTarget& t = targets[it->second];
            const Scalar fx = Scalar(t.box.x * grid.cols - j);
            const Scalar fy = Scalar(t.box.y * grid.rows - i);
            const Scalar tw = Scalar(std::log(t.box.w / prior.w));
            const Scalar th = Scalar(std::log(t.box.h / prior.h));
            const Scalar sx = sigmoid(out.data(o, col)), sy = sigmoid(out.data(o + 1, col));
            const Scalar dw = out.data(o + 2, col) - tw, dh = out.data(o + 3, col) - th;
            loss.regression += static_cast<double>((sx - fx) * (sx - fx) + (sy - fy) * (sy - fy) +
                                                   dw * dw + dh * dh);
            loss.confidence += static_cast<double>(softplus(to) - to);
            if (grads) {
              auto& g = (*grads)[s].data;
              g(o, col) = Scalar(2) * (sx - fx) * sx * (Scalar(1) - sx);
              g(o + 1, col) = Scalar(2) * (sy - fy) * sy * (Scalar(1) - sy);
              g(o + 2, col) = Scalar(2) * dw;
              g(o + 3, col) = Scalar(2) * dh;
              g(o + 4, col) = Scalar(config.lambda) * (sigmoid(to) - Scalar(1));
            }
            if (config.num_classes > 0) {
              if (t.cls < 1 || t.cls > config.num_classes)
                throw std::invalid_argument("localization_loss: target class outside [1, num_classes]");
              Eigen::Matrix<Scalar, Eigen::Dynamic, 1> logits =
                  out.data.col(col).segment(o + 5, config.num_classes);
              const Scalar mx = logits.maxCoeff();
              const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (logits.array() - mx).exp();
              const Scalar z = e.sum();
              loss.classification += static_cast<double>(std::log(z) + mx - logits(t.cls - 1));
              if (grads) {
                auto& g = (*grads)[s].data;
                for (int k = 0; k < config.num_classes; ++k)
                  g(o + 5 + k, col) = e(k) / z - (k == t.cls - 1 ? Scalar(1) : Scalar(0));
              }
            }
          } else {
            bool ignore = false;
            if (!targets.empty()) {
              const BBox pred = decode_anchor_box(
                  static_cast<double>(out.data(o, col)), static_cast<double>(out.data(o + 1, col)),
                  static_cast<double>(out.data(o + 2, col)), static_cast<double>(out.data(o + 3, col)),
                  GridCoord{i, j, static_cast<int>(s)}, grid, prior);
              if (pred.valid())
                for (const auto& t : targets)
                  if (iou(pred, t.box) > config.ignore_iou) {
                    ignore = true;
                    break;
                  }
            }
            if (ignore) continue;
            loss.confidence += static_cast<double>(softplus(to));
            if (grads) (*grads)[s].data(o + 4, col) = Scalar(config.lambda) * sigmoid(to);
          }
        }
      }
  }
  loss.total = loss.regression + config.lambda * loss.confidence + loss.classification;
  return loss;
}

template DetectionLoss localization_loss(const HeadOutputs<float>&, std::span<const LocalizationTarget>,
                                         const DetectorConfig&, HeadOutputs<float>*);
template DetectionLoss localization_loss(const HeadOutputs<double>&, std::span<const LocalizationTarget>,
                                         const DetectorConfig&, HeadOutputs<double>*);

// ---------------------------------------------------------------------------
// Model

LabelDetector::LabelDetector(DetectorConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  backbone_ = nn::Backbone<float>(config_.backbone);
  std::mt19937_64 rng(seed);
  backbone_.init(rng);
  for (std::size_t s = 0; s < config_.strides().size(); ++s) {
    nn::Conv2d<float> head(backbone_.output_channels(),
                           config_.anchors.count(s) * config_.channels_per_anchor(), 1, 1,
                           nn::Activation::kNone);
    head.init(rng);
    head.weight.value *= 0.1f;
    for (int a = 0; a < config_.anchors.count(s); ++a)
      head.bias.value(a * config_.channels_per_anchor() + 4, 0) = -4.0f;
    heads_.push_back(std::move(head));
  }
}

FeatureGrid<float> LabelDetector::extract_features(const Image& image, const BinaryMask* mask) const {
  return run_backbone(backbone_, image_tensor<float>(image, config_.input_size,
                                                     config_.backbone.in_channels, mask));
}

HeadOutputs<float> LabelDetector::heads(const FeatureGrid<float>& features) const {
  HeadOutputs<float> out;
  for (std::size_t s = 0; s < heads_.size(); ++s) out.push_back(heads_[s].forward(features.scales[s]));
  return out;
}

std::vector<RawDetection> LabelDetector::predict(const Image& image) const {
  return predict_boxes(heads(extract_features(image)), config_);
}

std::vector<RawDetection> LabelDetector::detect(const Image& image) const {
  return cull(predict(image), config_.conf_threshold, config_.nms_iou);
}

DetectionLoss LabelDetector::accumulate_gradients(const nn::FeatureMap<float>& input,
                                                  std::span<const LocalizationTarget> targets) {
  nn::Backbone<float>::Tape tape;
  const auto features = backbone_.forward(input, &tape);
  HeadOutputs<float> outputs;
  std::vector<nn::Conv2d<float>::Cache> caches(heads_.size());
  for (std::size_t s = 0; s < heads_.size(); ++s) outputs.push_back(heads_[s].forward(features[s], &caches[s]));
  HeadOutputs<float> grads;
  const DetectionLoss loss = localization_loss(outputs, targets, config_, &grads);
  std::vector<nn::FeatureMap<float>> dfeat;
  for (std::size_t s = 0; s < heads_.size(); ++s) dfeat.push_back(heads_[s].backward(grads[s], caches[s]));
  backbone_.backward(dfeat, tape);
  return loss;
}

nn::ParameterList<float> LabelDetector::parameters() {
  auto params = backbone_.parameters();
  for (auto& h : heads_)
    for (auto* p : h.parameters()) params.push_back(p);
  return params;
}

void LabelDetector::save(const std::filesystem::path& path) const {
  auto& self = const_cast<LabelDetector&>(*this);
  write_checkpoint(path, kModelKind, json(config_),
                   [&](std::ostream& os) { nn::write_parameters(os, self.parameters()); });
}

LabelDetector LabelDetector::load(const std::filesystem::path& path) {
  std::optional<LabelDetector> model;
  read_checkpoint(path, kModelKind, [&](const CheckpointHeader& h, std::istream& is) {
    model.emplace(h.config.get<DetectorConfig>());
    nn::read_parameters(is, model->parameters());
  });
  return std::move(*model);
}

LabelDetector LabelDetector::load(const std::filesystem::path& path, const DetectorConfig& expected) {
  std::optional<LabelDetector> model;
  read_checkpoint(path, kModelKind, [&](const CheckpointHeader& h, std::istream& is) {
    if (h.config.get<DetectorConfig>() != expected)
      throw CheckpointError("stored detector config does not match the requested config");
    model.emplace(expected);
    nn::read_parameters(is, model->parameters());
  });
  return std::move(*model);
}

std::vector<LocalizationTarget> label_targets(const FigureRecord& record, bool with_classes) {
  std::vector<LocalizationTarget> t;
  for (const auto& l : record.label_boxes) t.push_back({l.box, with_classes ? l.cls : 0});
  return t;
}

LocalizerTraining train_localizer(std::span<const FigureRecord> corpus, const DetectorConfig& config,
                                  const TrainingSchedule& schedule, const AugmentOptions& augment) {
  if (corpus.empty()) throw std::invalid_argument("train_localizer: empty corpus");
  LabelDetector model(config, schedule.seed);
  const bool with_classes = config.num_classes > 0;
  std::vector<nn::FeatureMap<float>> inputs;
  std::vector<std::vector<LocalizationTarget>> targets;
  if (!augment.enabled)
    for (const auto& r : corpus) {
      inputs.push_back(image_tensor<float>(r.image, config.input_size, config.backbone.in_channels));
      targets.push_back(label_targets(r, with_classes));
    }
  std::vector<std::string> cols{"total", "l1_regression", "l2_confidence"};
  if (with_classes) cols.push_back("classification");
  std::uint64_t calls = 0;
  TrainingLog log = run_training(model.parameters(), corpus.size(), schedule, cols, [&](std::size_t k) {
    DetectionLoss l;
    if (augment.enabled) {
      const FigureRecord r = augment_figure(corpus[k], mix_seed(schedule.seed, calls++), augment);
      l = model.accumulate_gradients(
          image_tensor<float>(r.image, config.input_size, config.backbone.in_channels),
          label_targets(r, with_classes));
    } else {
      l = model.accumulate_gradients(inputs[k], targets[k]);
    }
    std::vector<double> row{l.total, l.regression, l.confidence};
    if (with_classes) row.push_back(l.classification);
    return row;
  });
  return {std::move(model), std::move(log)};
}

std::vector<LabeledBox> joint_labeled_boxes(std::span<const RawDetection> detections) {
  std::vector<LabeledBox> out;
  for (const auto& d : detections) {
    if (d.class_probs.empty()) continue;
    const auto it = std::max_element(d.class_probs.begin(), d.class_probs.end());
    out.push_back(LabeledBox{d.box, static_cast<int>(it - d.class_probs.begin()) + 1,
                             d.confidence * *it});
  }
  return out;
}

}  // namespace figsep
