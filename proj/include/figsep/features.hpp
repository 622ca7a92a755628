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

#include <vector>

#include "figsep/geometry.hpp"
#include "figsep/image.hpp"
#include "figsep/nn/backbone.hpp"

namespace figsep {

/// Feature vectors F_{i,j} at one or more scales, finest first.
template <typename Scalar>
struct FeatureGrid {
  std::vector<nn::FeatureMap<Scalar>> scales;
  std::vector<int> strides;

  GridShape grid(std::size_t s) const { return {scales[s].height, scales[s].width}; }
  std::size_t size() const { return scales.size(); }
};

/// Square network input: the image resized to size x size, RGB mapped to
/// [-0.5, 0.5], plus the binary mask as a fourth channel when `channels` is 4
/// (an absent mask contributes a zero channel). Throws std::invalid_argument if
/// the mask resolution differs from `size` or a mask is given to a 3-channel input.
template <typename Scalar>
nn::FeatureMap<Scalar> image_tensor(const Image& image, int size, int channels,
                                    const BinaryMask* mask = nullptr) {
  if (channels != 3 && channels != 4) throw std::invalid_argument("image_tensor: 3 or 4 channels");
  if (mask && channels != 4)
    throw std::invalid_argument("image_tensor: mask given to a model without a mask channel");
  if (mask && (mask->height() != size || mask->width() != size))
    throw std::invalid_argument("image_tensor: mask resolution does not match the input resolution");
  const Image resized = (image.height() == size && image.width() == size)
                            ? image
                            : resize_bilinear(image, size, size);
  auto t = nn::FeatureMap<Scalar>::zeros(channels, size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < 3; ++c)
        t.at(c, y, x) = static_cast<Scalar>(resized.at(y, x, c) / 255.0 - 0.5);
      if (mask) t.at(3, y, x) = static_cast<Scalar>((*mask)(y, x));
    }
  return t;
}

template <typename Scalar>
FeatureGrid<Scalar> run_backbone(const nn::Backbone<Scalar>& backbone,
                                 const nn::FeatureMap<Scalar>& input,
                                 typename nn::Backbone<Scalar>::Tape* tape = nullptr) {
  FeatureGrid<Scalar> g;
  g.scales = backbone.forward(input, tape);
  g.strides = backbone.config().out_strides;
  return g;
}

}  // namespace figsep
