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
#include <random>
#include <stdexcept>

#include "figsep/nn/tensor.hpp"

namespace figsep::nn {

enum class Activation { kNone, kLeaky };

inline constexpr double kLeakySlope = 0.1;

/// 2-D convolution with "same" padding (kernel/2), lowered to a GEMM over an
/// im2col buffer. Weights are out x (in*k*k); rows of the im2col buffer are
/// ordered (channel, ky, kx).
template <typename Scalar>
class Conv2d {
 public:
  struct Cache {
    Matrix<Scalar> cols;
    Matrix<Scalar> pre;  // pre-activation, kept only for kLeaky
    int in_height{0};
    int in_width{0};
  };

  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, int stride, Activation act)
      : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), act_(act) {
    if (kernel % 2 != 1 || stride < 1) throw std::invalid_argument("Conv2d: bad geometry");
    weight.resize(out_, static_cast<Eigen::Index>(in_) * kernel_ * kernel_);
    bias.resize(out_, 1);
  }

  /// He-normal weights, zero bias.
  void init(std::mt19937_64& rng) {
    const double fan_in = static_cast<double>(in_) * kernel_ * kernel_;
    const double gain = act_ == Activation::kLeaky ? 2.0 / (1.0 + kLeakySlope * kLeakySlope) : 1.0;
    std::normal_distribution<double> dist(0.0, std::sqrt(gain / fan_in));
    for (Eigen::Index k = 0; k < weight.value.size(); ++k)
      weight.value.data()[k] = static_cast<Scalar>(dist(rng));
    bias.value.setZero();
  }

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int kernel() const { return kernel_; }
  int stride() const { return stride_; }
  int out_size(int n) const { return (n + 2 * (kernel_ / 2) - kernel_) / stride_ + 1; }

  FeatureMap<Scalar> forward(const FeatureMap<Scalar>& x, Cache* cache = nullptr) const {
    if (x.channels != in_) throw std::invalid_argument("Conv2d: channel mismatch");
    const int oh = out_size(x.height);
    const int ow = out_size(x.width);
    FeatureMap<Scalar> y{out_, oh, ow, {}};
    if (kernel_ == 1 && stride_ == 1) {
      y.data.noalias() = weight.value * x.data;
      if (cache) cache->cols = x.data;
    } else {
      Matrix<Scalar> cols = im2col(x, oh, ow);
      y.data.noalias() = weight.value * cols;
      if (cache) cache->cols = std::move(cols);
    }
    y.data.colwise() += bias.value.col(0);
    if (cache) {
      cache->in_height = x.height;
      cache->in_width = x.width;
    }
    if (act_ == Activation::kLeaky) {
      if (cache) cache->pre = y.data;
      y.data = y.data.unaryExpr([](Scalar v) { return v > 0 ? v : Scalar(kLeakySlope) * v; });
    }
    return y;
  }

  /// Accumulates parameter gradients; returns the input gradient when requested
  /// (otherwise an empty map).
  FeatureMap<Scalar> backward(const FeatureMap<Scalar>& grad_out, const Cache& cache,
                              bool want_input_grad = true) {
    Matrix<Scalar> g = grad_out.data;
    if (act_ == Activation::kLeaky)
      g.array() *= cache.pre.array().unaryExpr(
          [](Scalar v) { return v > 0 ? Scalar(1) : Scalar(kLeakySlope); });
    weight.grad.noalias() += g * cache.cols.transpose();
    bias.grad.col(0) += g.rowwise().sum();
    if (!want_input_grad) return {};
    Matrix<Scalar> dcols = weight.value.transpose() * g;
    if (kernel_ == 1 && stride_ == 1)
      return FeatureMap<Scalar>{in_, cache.in_height, cache.in_width, std::move(dcols)};
    return col2im(dcols, cache.in_height, cache.in_width, grad_out.height, grad_out.width);
  }

  ParameterList<Scalar> parameters() { return {&weight, &bias}; }

  Parameter<Scalar> weight;
  Parameter<Scalar> bias;

 private:
  Matrix<Scalar> im2col(const FeatureMap<Scalar>& x, int oh, int ow) const {
    const int pad = kernel_ / 2;
    Matrix<Scalar> cols(static_cast<Eigen::Index>(in_) * kernel_ * kernel_,
                        static_cast<Eigen::Index>(oh) * ow);
    for (int c = 0; c < in_; ++c) {
      const Scalar* src = x.data.row(c).data();
      for (int ky = 0; ky < kernel_; ++ky) {
        for (int kx = 0; kx < kernel_; ++kx) {
          Scalar* dst = cols.row((c * kernel_ + ky) * kernel_ + kx).data();
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride_ - pad + ky;
            Scalar* row = dst + static_cast<std::ptrdiff_t>(oy) * ow;
            if (iy < 0 || iy >= x.height) {
              std::fill(row, row + ow, Scalar(0));
              continue;
            }
            const Scalar* srow = src + static_cast<std::ptrdiff_t>(iy) * x.width;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride_ - pad + kx;
              row[ox] = (ix >= 0 && ix < x.width) ? srow[ix] : Scalar(0);
            }
          }
        }
      }
    }
    return cols;
  }

  FeatureMap<Scalar> col2im(const Matrix<Scalar>& dcols, int h, int w, int oh, int ow) const {
    const int pad = kernel_ / 2;
    FeatureMap<Scalar> dx = FeatureMap<Scalar>::zeros(in_, h, w);
    for (int c = 0; c < in_; ++c) {
      Scalar* dst = dx.data.row(c).data();
      for (int ky = 0; ky < kernel_; ++ky) {
        for (int kx = 0; kx < kernel_; ++kx) {
          const Scalar* src = dcols.row((c * kernel_ + ky) * kernel_ + kx).data();
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride_ - pad + ky;
            if (iy < 0 || iy >= h) continue;
            const Scalar* row = src + static_cast<std::ptrdiff_t>(oy) * ow;
            Scalar* drow = dst + static_cast<std::ptrdiff_t>(iy) * w;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride_ - pad + kx;
              if (ix >= 0 && ix < w) drow[ix] += row[ox];
            }
          }
        }
      }
    }
    return dx;
  }

  int in_{0};
  int out_{0};
  int kernel_{1};
  int stride_{1};
  Activation act_{Activation::kNone};
};

/// Nearest-neighbour upsampling to an explicit target size (handles odd sizes).
template <typename Scalar>
FeatureMap<Scalar> upsample_nearest(const FeatureMap<Scalar>& x, int height, int width) {
  FeatureMap<Scalar> y{x.channels, height, width, {}};
  y.data.resize(x.channels, static_cast<Eigen::Index>(height) * width);
  for (int oy = 0; oy < height; ++oy) {
    const int iy = std::min(oy * x.height / height, x.height - 1);
    for (int ox = 0; ox < width; ++ox) {
      const int ix = std::min(ox * x.width / width, x.width - 1);
      y.data.col(static_cast<Eigen::Index>(oy) * width + ox) =
          x.data.col(static_cast<Eigen::Index>(iy) * x.width + ix);
    }
  }
  return y;
}

template <typename Scalar>
FeatureMap<Scalar> upsample_nearest_backward(const FeatureMap<Scalar>& grad, int height,
                                             int width) {
  FeatureMap<Scalar> dx = FeatureMap<Scalar>::zeros(grad.channels, height, width);
  for (int oy = 0; oy < grad.height; ++oy) {
    const int iy = std::min(oy * height / grad.height, height - 1);
    for (int ox = 0; ox < grad.width; ++ox) {
      const int ix = std::min(ox * width / grad.width, width - 1);
      dx.data.col(static_cast<Eigen::Index>(iy) * width + ix) +=
          grad.data.col(static_cast<Eigen::Index>(oy) * grad.width + ox);
    }
  }
  return dx;
}

/// Spatial mean; result is a channels x 1 map.
template <typename Scalar>
FeatureMap<Scalar> global_average_pool(const FeatureMap<Scalar>& x) {
  FeatureMap<Scalar> y{x.channels, 1, 1, {}};
  y.data = x.data.rowwise().mean();
  return y;
}

template <typename Scalar>
FeatureMap<Scalar> global_average_pool_backward(const FeatureMap<Scalar>& grad, int height,
                                                int width) {
  const Eigen::Index n = static_cast<Eigen::Index>(height) * width;
  FeatureMap<Scalar> dx{grad.channels, height, width, {}};
  dx.data = (grad.data.col(0) / Scalar(n)).replicate(1, n);
  return dx;
}

}  // namespace figsep::nn
