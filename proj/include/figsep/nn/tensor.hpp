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

#include <Eigen/Core>

#include <cassert>
#include <vector>

namespace figsep::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Channel-major activation map: `data` is channels x (height*width), so one
/// column is the feature vector of one spatial position.
template <typename Scalar>
struct FeatureMap {
  int channels{0};
  int height{0};
  int width{0};
  Matrix<Scalar> data;

  static FeatureMap zeros(int c, int h, int w) {
    return FeatureMap{c, h, w, Matrix<Scalar>::Zero(c, static_cast<Eigen::Index>(h) * w)};
  }

  Scalar& at(int c, int y, int x) { return data(c, static_cast<Eigen::Index>(y) * width + x); }
  Scalar at(int c, int y, int x) const {
    return data(c, static_cast<Eigen::Index>(y) * width + x);
  }
  auto vector_at(int y, int x) { return data.col(static_cast<Eigen::Index>(y) * width + x); }
  auto vector_at(int y, int x) const {
    return data.col(static_cast<Eigen::Index>(y) * width + x);
  }

  bool same_shape(const FeatureMap& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }

  template <typename Other>
  FeatureMap<Other> cast() const {
    return FeatureMap<Other>{channels, height, width, data.template cast<Other>()};
  }
};

/// Trainable tensor with its gradient and Adam moments.
template <typename Scalar>
struct Parameter {
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  Matrix<Scalar> m;
  Matrix<Scalar> v;

  void resize(Eigen::Index rows, Eigen::Index cols) {
    value = Matrix<Scalar>::Zero(rows, cols);
    grad = Matrix<Scalar>::Zero(rows, cols);
    m = Matrix<Scalar>::Zero(rows, cols);
    v = Matrix<Scalar>::Zero(rows, cols);
  }
  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

template <typename Scalar>
using ParameterList = std::vector<Parameter<Scalar>*>;

/// Stacks maps along the channel axis.
template <typename Scalar>
FeatureMap<Scalar> concat_channels(const FeatureMap<Scalar>& a, const FeatureMap<Scalar>& b) {
  assert(a.height == b.height && a.width == b.width);
  FeatureMap<Scalar> out{a.channels + b.channels, a.height, a.width, {}};
  out.data.resize(out.channels, a.data.cols());
  out.data << a.data, b.data;
  return out;
}

}  // namespace figsep::nn
