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
#include <cmath>
#include <vector>

#include <Eigen/Core>

namespace figsep::nn {

template <typename T>
T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

/// log(1 + e^v) without overflow.
template <typename T>
T softplus(T v) {
  return std::max(v, T(0)) + std::log1p(std::exp(-std::abs(v)));
}

/// Numerically stable softmax of a column vector.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  const S m = logits.maxCoeff();
  Eigen::Matrix<S, Eigen::Dynamic, 1> e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

/// Index of the largest entry; ties resolve to the lowest index.
template <typename Range>
int argmax(const Range& values) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(values.size()); ++k)
    if (values[k] > values[best]) best = k;
  return best;
}

}  // namespace figsep::nn
