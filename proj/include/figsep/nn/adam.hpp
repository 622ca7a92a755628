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

#include <cmath>

#include "figsep/nn/tensor.hpp"

namespace figsep::nn {

struct AdamOptions {
  double learning_rate{1e-3};
  double beta1{0.9};
  double beta2{0.999};
  double epsilon{1e-8};
  double weight_decay{0.0};
  double grad_clip{0.0};  // global L2 norm; 0 disables
};

/// Adam with optional global gradient-norm clipping. Gradients are consumed
/// (zeroed) by `step`.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void set_learning_rate(double lr) { options_.learning_rate = lr; }
  double learning_rate() const { return options_.learning_rate; }
  long steps() const { return t_; }

  void step(const ParameterList<Scalar>& params, double grad_scale = 1.0) {
    ++t_;
    double scale = grad_scale;
    if (options_.grad_clip > 0.0) {
      double sq = 0.0;
      for (auto* p : params) sq += static_cast<double>(p->grad.squaredNorm());
      const double norm = std::sqrt(sq) * grad_scale;
      if (norm > options_.grad_clip) scale *= options_.grad_clip / norm;
    }
    const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
    const auto b1 = static_cast<Scalar>(options_.beta1);
    const auto b2 = static_cast<Scalar>(options_.beta2);
    const auto lr = static_cast<Scalar>(options_.learning_rate * std::sqrt(c2) / c1);
    const auto eps = static_cast<Scalar>(options_.epsilon);
    const auto wd = static_cast<Scalar>(options_.weight_decay);
    for (auto* p : params) {
      auto g = (p->grad.array() * Scalar(scale) + wd * p->value.array()).eval();
      p->m.array() = b1 * p->m.array() + (Scalar(1) - b1) * g;
      p->v.array() = b2 * p->v.array() + (Scalar(1) - b2) * g.square();
      p->value.array() -= lr * p->m.array() / (p->v.array().sqrt() + eps);
      p->zero_grad();
    }
  }

 private:
  AdamOptions options_;
  long t_{0};
};

/// Step decay: lr = base * factor^(floor(step / interval)).
inline double step_decay(double base, long step, long interval, double factor) {
  if (interval <= 0) return base;
  return base * std::pow(factor, static_cast<double>(step / interval));
}

}  // namespace figsep::nn
