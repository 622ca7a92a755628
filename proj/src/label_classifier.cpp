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

#include "figsep/label_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "figsep/checkpoint.hpp"
#include "figsep/features.hpp"
#include "figsep/nn/math.hpp"
#include "figsep/nn/serialize.hpp"
#include "figsep/random.hpp"

namespace figsep {

using nlohmann::json;

void ClassifierConfig::validate() const {
  if (num_classes < 2) throw std::invalid_argument("ClassifierConfig: need at least 2 classes");
  if (widths.empty() || depth < 1) throw std::invalid_argument("ClassifierConfig: empty network");
  const int reduction = 1 << (widths.size() - 1);
  if (input_size < reduction || input_size % reduction != 0)
    throw std::invalid_argument("ClassifierConfig: input_size must be a multiple of the total stride");
  if (padding < 0.0) throw std::invalid_argument("ClassifierConfig: padding must be >= 0");
}

ClassifierConfig ClassifierConfig::desk(int alphabet_size) {
  ClassifierConfig c;
  c.input_size = 32;
  c.num_classes = alphabet_size + 1;
  c.widths = {16, 32, 64};
  c.depth = 2;
  return c;
}

void to_json(json& j, const ClassifierConfig& c) {
  j = json{{"input_size", c.input_size}, {"num_classes", c.num_classes}, {"widths", c.widths},
           {"depth", c.depth}, {"padding", c.padding}};
}

void from_json(const json& j, ClassifierConfig& c) {
  c.input_size = j.value("input_size", c.input_size);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.widths = j.value("widths", c.widths);
  c.depth = j.value("depth", c.depth);
  c.padding = j.value("padding", c.padding);
}

template <typename Scalar>
Scalar cross_entropy(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& logits, int target,
                     Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* grad) {
  if (target < 0 || target >= logits.size()) throw std::invalid_argument("cross_entropy: target out of range");
  const Scalar m = logits.maxCoeff();
  const Scalar lse = m + std::log((logits.array() - m).exp().sum());
  if (grad) {
    *grad = nn::softmax(logits);
    (*grad)(target) -= Scalar(1);
  }
  return lse - logits(target);
}

template float cross_entropy<float>(const Eigen::VectorXf&, int, Eigen::VectorXf*);
template double cross_entropy<double>(const Eigen::VectorXd&, int, Eigen::VectorXd*);

Image crop_patch(const Image& image, const BBox& box, const ClassifierConfig& config) {
  return crop_square_patch(image, box, config.padding, config.input_size);
}

// ---------------------------------------------------------------------------
// Network

LabelClassifier::LabelClassifier(ClassifierConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(mix_seed(seed, 0xC1A5));
  int in = 3;
  for (std::size_t s = 0; s < config_.widths.size(); ++s)
    for (int d = 0; d < config_.depth; ++d) {
      const int stride = (s > 0 && d == 0) ? 2 : 1;
      convs_.emplace_back(in, config_.widths[s], 3, stride, nn::Activation::kLeaky);
      convs_.back().init(rng);
      in = config_.widths[s];
    }
  fc_ = nn::Conv2d<float>(in, config_.num_classes, 1, 1, nn::Activation::kNone);
  fc_.init(rng);
}

Eigen::VectorXf LabelClassifier::forward(const nn::FeatureMap<float>& input, Tape* tape) const {
  if (tape) tape->convs.resize(convs_.size());
  nn::FeatureMap<float> x = input;
  for (std::size_t k = 0; k < convs_.size(); ++k) x = convs_[k].forward(x, tape ? &tape->convs[k] : nullptr);
  if (tape) {
    tape->pooled_height = x.height;
    tape->pooled_width = x.width;
  }
  const auto logits = fc_.forward(nn::global_average_pool(x), tape ? &tape->fc : nullptr);
  return logits.data.col(0);
}

Eigen::VectorXf LabelClassifier::logits(const Image& patch) const {
  if (patch.height() != config_.input_size || patch.width() != config_.input_size)
    throw std::invalid_argument("classify: patch must be " + std::to_string(config_.input_size) +
                                " pixels square");
  return forward(image_tensor<float>(patch, config_.input_size, 3), nullptr);
}

Classification LabelClassifier::classify(const Image& patch) const {
  const Eigen::VectorXd p = nn::softmax(logits(patch).cast<double>().eval());
  Classification c;
  c.probs.assign(p.data(), p.data() + p.size());
  c.cls = nn::argmax(c.probs);
  return c;
}

double LabelClassifier::accumulate_gradients(const Image& patch, int target) {
  Tape tape;
  const Eigen::VectorXf z = forward(image_tensor<float>(patch, config_.input_size, 3), &tape);
  Eigen::VectorXf dz;
  const float loss = cross_entropy<float>(z, target, &dz);
  nn::FeatureMap<float> g{config_.num_classes, 1, 1, dz};
  g = fc_.backward(g, tape.fc);
  g = nn::global_average_pool_backward(g, tape.pooled_height, tape.pooled_width);
  for (std::size_t k = convs_.size(); k-- > 0;) g = convs_[k].backward(g, tape.convs[k], k > 0);
  return loss;
}

nn::ParameterList<float> LabelClassifier::parameters() {
  nn::ParameterList<float> out;
  for (auto& c : convs_)
    for (auto* p : c.parameters()) out.push_back(p);
  for (auto* p : fc_.parameters()) out.push_back(p);
  return out;
}

void LabelClassifier::save(const std::filesystem::path& path) const {
  auto& self = const_cast<LabelClassifier&>(*this);
  write_checkpoint(path, kModelKind, json(config_),
                   [&](std::ostream& os) { nn::write_parameters(os, self.parameters()); });
}

LabelClassifier LabelClassifier::load(const std::filesystem::path& path) {
  std::optional<LabelClassifier> model;
  read_checkpoint(path, kModelKind, [&](const CheckpointHeader& h, std::istream& is) {
    model.emplace(h.config.get<ClassifierConfig>());
    nn::read_parameters(is, model->parameters());
  });
  return std::move(*model);
}

LabelClassifier LabelClassifier::load(const std::filesystem::path& path, const ClassifierConfig& expected) {
  std::optional<LabelClassifier> model;
  read_checkpoint(path, kModelKind, [&](const CheckpointHeader& h, std::istream& is) {
    if (h.config.get<ClassifierConfig>() != expected)
      throw CheckpointError("stored classifier config does not match the requested config");
    model.emplace(expected);
    nn::read_parameters(is, model->parameters());
  });
  return std::move(*model);
}

// ---------------------------------------------------------------------------
// Data

namespace {

BBox perturb(BBox b, Rng& rng) {
  b.x += uniform(rng, -0.12, 0.12) * b.w;
  b.y += uniform(rng, -0.12, 0.12) * b.h;
  b.w *= uniform(rng, 0.85, 1.2);
  b.h *= uniform(rng, 0.85, 1.2);
  return b;
}

}  // namespace

std::vector<PatchSample> real_label_patches(std::span<const FigureRecord> corpus,
                                            const ClassifierConfig& config, std::uint64_t seed,
                                            int copies) {
  std::vector<PatchSample> out;
  for (std::size_t f = 0; f < corpus.size(); ++f) {
    const FigureRecord& r = corpus[f];
    Rng rng(mix_seed(seed, f));
    for (const auto& l : r.label_boxes)
      for (int c = 0; c < copies; ++c) out.push_back({crop_patch(r.image, perturb(l.box, rng), config), l.cls});
    // Background crops of label size placed away from every label.
    int wanted = static_cast<int>(r.label_boxes.size()) * copies;
    for (int attempt = 0; wanted > 0 && attempt < 40 * copies * 4; ++attempt) {
      const LabeledBox& ref = r.label_boxes.empty() ? LabeledBox{{0.5, 0.5, 0.05, 0.05}} : r.label_boxes[
          static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(r.label_boxes.size()) - 1))];
      BBox b = ref.box;
      b.x = uniform(rng, b.w / 2, 1.0 - b.w / 2);
      b.y = uniform(rng, b.h / 2, 1.0 - b.h / 2);
      BBox grown = b;
      grown.w *= 1.0 + 2.0 * config.padding;
      grown.h *= 1.0 + 2.0 * config.padding;
      const bool clear = std::none_of(r.label_boxes.begin(), r.label_boxes.end(), [&](const LabeledBox& l) {
        return intersection_area(grown, l.box) > 0.0;
      });
      if (!clear) continue;
      out.push_back({crop_patch(r.image, b, config), 0});
      --wanted;
    }
  }
  return out;
}

PatchStream synthetic_patch_stream(std::span<const FigureRecord> backgrounds, const Alphabet& alphabet,
                                   const ClassifierConfig& config, std::uint64_t seed,
                                   PatchOptions options) {
  options.patch_size = config.input_size;
  options.padding = config.padding;
  std::vector<FigureRecord> figs(backgrounds.begin(), backgrounds.end());
  return [figs = std::move(figs), alphabet, options, seed](std::uint64_t index) {
    LabelPatch p = generate_label_patch(figs, alphabet, mix_seed(seed, index), options);
    return PatchSample{std::move(p.raster), p.cls};
  };
}

ClassifierTraining train_classifier(std::span<const PatchSample> real, const PatchStream& synthetic,
                                    MixRatio ratio, const ClassifierConfig& config,
                                    const TrainingSchedule& schedule) {
  if (!(ratio.real >= 0.0 && ratio.synthetic >= 0.0 && ratio.real + ratio.synthetic > 0.0))
    throw std::invalid_argument("train_classifier: mix ratio needs a positive share");
  const int n_real = static_cast<int>(
      std::lround(schedule.batch_size * ratio.real / (ratio.real + ratio.synthetic)));
  if (n_real > 0 && real.empty()) throw std::invalid_argument("train_classifier: no real patches");
  if (n_real < schedule.batch_size && !synthetic)
    throw std::invalid_argument("train_classifier: no synthetic stream");
  for (const auto& p : real)
    if (p.target < 0 || p.target >= config.num_classes)
      throw std::invalid_argument("train_classifier: patch target out of range");

  LabelClassifier model(config, schedule.seed);
  std::uint64_t calls = 0;
  TrainingLog log = run_training(model.parameters(), std::max<std::size_t>(real.size(), 1), schedule,
                                 {"l3_cross_entropy"}, [&](std::size_t index) {
    const int slot = static_cast<int>(calls % static_cast<std::uint64_t>(schedule.batch_size));
    const std::uint64_t call = calls++;
    if (slot < n_real) return std::vector<double>{model.accumulate_gradients(real[index].raster, real[index].target)};
    const PatchSample s = synthetic(call);
    return std::vector<double>{model.accumulate_gradients(s.raster, s.target)};
  });
  return {std::move(model), std::move(log)};
}

std::vector<LabeledBox> annotate_detections(const Image& image, std::span<const RawDetection> detections,
                                            const LabelClassifier& classifier, double epsilon) {
  std::map<int, LabeledBox> best;
  for (const auto& d : detections) {
    if (!(d.confidence > epsilon)) continue;
    const Classification c = classifier.classify(crop_patch(image, d.box, classifier.config()));
    if (c.cls == 0) continue;
    const LabeledBox l{d.box, c.cls, d.confidence * c.probs[static_cast<std::size_t>(c.cls)]};
    auto it = best.find(c.cls);
    if (it == best.end())
      best.emplace(c.cls, l);
    else if (l.confidence > it->second.confidence)
      it->second = l;
  }
  std::vector<LabeledBox> out;
  for (auto& [cls, l] : best) out.push_back(l);
  return out;
}

}  // namespace figsep
