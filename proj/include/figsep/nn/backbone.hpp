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

#include <algorithm>
#include <random>
#include <stdexcept>
#include <vector>

#include "figsep/nn/layers.hpp"

namespace figsep::nn {

/// Strided convolutional encoder followed by a top-down merge path.
///
/// Stage k downsamples by two (one stride-2 3x3 conv) and then applies `depth`
/// stride-1 3x3 convs, so stage k ends at stride 2^(k+1). The coarsest stage is
/// projected to `neck_width` channels; every finer merged level is a 3x3 conv
/// over [upsampled coarser level, stage output]. Outputs are the merged levels
/// at `out_strides`, finest first.
struct BackboneConfig {
  int in_channels{3};
  std::vector<int> widths{8, 16, 32, 64, 64};
  int depth{1};
  int neck_width{32};
  std::vector<int> out_strides{8, 16};

  int stage_of_stride(int stride) const {
    for (std::size_t k = 0; k < widths.size(); ++k)
      if ((2 << k) == stride) return static_cast<int>(k);
    throw std::invalid_argument("BackboneConfig: stride " + std::to_string(stride) +
                                " is not produced by any stage");
  }
  int max_stride() const { return 1 << widths.size(); }
  bool operator==(const BackboneConfig&) const = default;
};

template <typename Scalar>
class Backbone {
 public:
  struct Tape {
    std::vector<std::vector<typename Conv2d<Scalar>::Cache>> stage_caches;
    std::vector<FeatureMap<Scalar>> stage_outputs;
    typename Conv2d<Scalar>::Cache lateral_cache;
    std::vector<typename Conv2d<Scalar>::Cache> merge_caches;  // indexed by stage
    std::vector<FeatureMap<Scalar>> merged;                     // indexed by stage
    int in_height{0};
    int in_width{0};
  };

  Backbone() = default;
  explicit Backbone(BackboneConfig config) : config_(std::move(config)) {
    if (config_.widths.empty() || config_.out_strides.empty())
      throw std::invalid_argument("BackboneConfig: empty widths or out_strides");
    std::sort(config_.out_strides.begin(), config_.out_strides.end());
    finest_ = config_.stage_of_stride(config_.out_strides.front());
    config_.stage_of_stride(config_.out_strides.back());
    int in = config_.in_channels;
    for (int w : config_.widths) {
      std::vector<Conv2d<Scalar>> stage;
      stage.emplace_back(in, w, 3, 2, Activation::kLeaky);
      for (int d = 0; d < config_.depth; ++d) stage.emplace_back(w, w, 3, 1, Activation::kLeaky);
      stages_.push_back(std::move(stage));
      in = w;
    }
    const int top = static_cast<int>(config_.widths.size()) - 1;
    lateral_ = Conv2d<Scalar>(config_.widths[top], config_.neck_width, 1, 1, Activation::kLeaky);
    merges_.resize(config_.widths.size());
    for (int k = finest_; k < top; ++k)
      merges_[k] = Conv2d<Scalar>(config_.neck_width + config_.widths[k], config_.neck_width, 3,
                                  1, Activation::kLeaky);
  }

  const BackboneConfig& config() const { return config_; }
  int output_channels() const { return config_.neck_width; }

  void init(std::mt19937_64& rng) {
    for (auto& stage : stages_)
      for (auto& conv : stage) conv.init(rng);
    lateral_.init(rng);
    for (int k = finest_; k < top(); ++k) merges_[k].init(rng);
  }

  /// First-layer weights; columns [c*9, c*9+9) belong to input channel c.
  Parameter<Scalar>& input_weights() { return stages_.front().front().weight; }

  std::vector<FeatureMap<Scalar>> forward(const FeatureMap<Scalar>& x, Tape* tape = nullptr) const {
    if (x.channels != config_.in_channels)
      throw std::invalid_argument("Backbone: expected " + std::to_string(config_.in_channels) +
                                  " input channels");
    Tape local;
    Tape& t = tape ? *tape : local;
    t.in_height = x.height;
    t.in_width = x.width;
    t.stage_caches.assign(stages_.size(), {});
    t.stage_outputs.assign(stages_.size(), {});
    const FeatureMap<Scalar>* cur = &x;
    for (std::size_t k = 0; k < stages_.size(); ++k) {
      t.stage_caches[k].resize(stages_[k].size());
      FeatureMap<Scalar> h = *cur;
      for (std::size_t l = 0; l < stages_[k].size(); ++l)
        h = stages_[k][l].forward(h, tape ? &t.stage_caches[k][l] : nullptr);
      t.stage_outputs[k] = std::move(h);
      cur = &t.stage_outputs[k];
    }
    t.merged.assign(stages_.size(), {});
    t.merge_caches.assign(stages_.size(), {});
    t.merged[top()] = lateral_.forward(t.stage_outputs[top()], tape ? &t.lateral_cache : nullptr);
    for (int k = top() - 1; k >= finest_; --k) {
      const auto& below = t.stage_outputs[k];
      auto up = upsample_nearest(t.merged[k + 1], below.height, below.width);
      t.merged[k] = merges_[k].forward(concat_channels(up, below),
                                       tape ? &t.merge_caches[k] : nullptr);
    }
    std::vector<FeatureMap<Scalar>> outs;
    for (int s : config_.out_strides) outs.push_back(t.merged[config_.stage_of_stride(s)]);
    return outs;
  }

  /// `grads` aligns with the forward outputs. Returns the input gradient if requested.
  FeatureMap<Scalar> backward(const std::vector<FeatureMap<Scalar>>& grads, const Tape& t,
                              bool want_input_grad = false) {
    const int n = static_cast<int>(stages_.size());
    std::vector<FeatureMap<Scalar>> dmerged(n);
    for (std::size_t o = 0; o < grads.size(); ++o) {
      const int k = config_.stage_of_stride(config_.out_strides[o]);
      if (grads[o].data.size() == 0) continue;
      accumulate(dmerged[k], grads[o]);
    }
    std::vector<FeatureMap<Scalar>> dstage(n);
    for (int k = finest_; k < top(); ++k) {
      if (dmerged[k].data.size() == 0) continue;
      auto dcat = merges_[k].backward(dmerged[k], t.merge_caches[k]);
      const int nw = config_.neck_width;
      FeatureMap<Scalar> dup{nw, dcat.height, dcat.width, dcat.data.topRows(nw)};
      FeatureMap<Scalar> dbelow{dcat.channels - nw, dcat.height, dcat.width,
                                dcat.data.bottomRows(dcat.channels - nw)};
      accumulate(dstage[k], dbelow);
      accumulate(dmerged[k + 1], upsample_nearest_backward(dup, t.merged[k + 1].height,
                                                           t.merged[k + 1].width));
    }
    if (dmerged[top()].data.size() != 0)
      accumulate(dstage[top()], lateral_.backward(dmerged[top()], t.lateral_cache));
    FeatureMap<Scalar> dinput;
    for (int k = n - 1; k >= 0; --k) {
      if (dstage[k].data.size() == 0) continue;
      FeatureMap<Scalar> g = std::move(dstage[k]);
      for (int l = static_cast<int>(stages_[k].size()) - 1; l >= 0; --l) {
        const bool first_layer = (k == 0 && l == 0);
        g = stages_[k][l].backward(g, t.stage_caches[k][l], !first_layer || want_input_grad);
      }
      if (k > 0)
        accumulate(dstage[k - 1], g);
      else
        dinput = std::move(g);
    }
    return dinput;
  }

  ParameterList<Scalar> parameters() {
    ParameterList<Scalar> out;
    for (auto& stage : stages_)
      for (auto& conv : stage)
        for (auto* p : conv.parameters()) out.push_back(p);
    for (auto* p : lateral_.parameters()) out.push_back(p);
    for (int k = finest_; k < top(); ++k)
      for (auto* p : merges_[k].parameters()) out.push_back(p);
    return out;
  }

 private:
  int top() const { return static_cast<int>(stages_.size()) - 1; }

  static void accumulate(FeatureMap<Scalar>& acc, const FeatureMap<Scalar>& g) {
    if (acc.data.size() == 0)
      acc = g;
    else
      acc.data += g.data;
  }

  BackboneConfig config_;
  int finest_{0};
  std::vector<std::vector<Conv2d<Scalar>>> stages_;
  Conv2d<Scalar> lateral_;
  std::vector<Conv2d<Scalar>> merges_;
};

}  // namespace figsep::nn
