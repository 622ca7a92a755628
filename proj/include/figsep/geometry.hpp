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

#include <algorithm>
#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace figsep {

/// Axis-aligned box in normalized center format. Stored unclipped.
template <typename Scalar>
struct Box {
  Scalar x{0};
  Scalar y{0};
  Scalar w{0};
  Scalar h{0};

  Scalar left() const { return x - w / 2; }
  Scalar right() const { return x + w / 2; }
  Scalar top() const { return y - h / 2; }
  Scalar bottom() const { return y + h / 2; }
  Scalar area() const { return w * h; }
  bool valid() const { return w > 0 && h > 0; }

  static Box from_corners(Scalar x0, Scalar y0, Scalar x1, Scalar y1) {
    return Box{(x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0};
  }

  /// Intersection with the unit square; w or h may become zero.
  Box clipped() const {
    const Scalar x0 = std::clamp(left(), Scalar(0), Scalar(1));
    const Scalar x1 = std::clamp(right(), Scalar(0), Scalar(1));
    const Scalar y0 = std::clamp(top(), Scalar(0), Scalar(1));
    const Scalar y1 = std::clamp(bottom(), Scalar(0), Scalar(1));
    return from_corners(x0, y0, x1, y1);
  }

  template <typename Other>
  Box<Other> cast() const {
    return Box<Other>{Other(x), Other(y), Other(w), Other(h)};
  }

  bool operator==(const Box&) const = default;
};

using BBox = Box<double>;

/// Union of the extents of two boxes.
template <typename Scalar>
Box<Scalar> enclosing(const Box<Scalar>& a, const Box<Scalar>& b) {
  return Box<Scalar>::from_corners(std::min(a.left(), b.left()), std::min(a.top(), b.top()),
                                   std::max(a.right(), b.right()),
                                   std::max(a.bottom(), b.bottom()));
}

template <typename Scalar>
Scalar intersection_area(const Box<Scalar>& a, const Box<Scalar>& b) {
  const Scalar iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const Scalar ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0 || ih <= 0) return Scalar(0);
  return iw * ih;
}

/// Intersection over union. Throws std::invalid_argument on a degenerate box.
template <typename Scalar>
Scalar iou(const Box<Scalar>& a, const Box<Scalar>& b) {
  if (!a.valid() || !b.valid()) throw std::invalid_argument("iou: box with non-positive extent");
  const Scalar inter = intersection_area(a, b);
  const Scalar uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

/// IoU of two boxes sharing a center; used to pick anchor priors.
template <typename Scalar>
Scalar shape_iou(Scalar w0, Scalar h0, Scalar w1, Scalar h1) {
  const Scalar inter = std::min(w0, w1) * std::min(h0, h1);
  return inter / (w0 * h0 + w1 * h1 - inter);
}

struct GridShape {
  int rows{0};
  int cols{0};
  int cells() const { return rows * cols; }
  bool operator==(const GridShape&) const = default;
};

struct GridCoord {
  int i{0};
  int j{0};
  int scale{0};
  auto operator<=>(const GridCoord&) const = default;
};

/// Floor mapping of a normalized point onto a grid. Points must lie in [0,1]^2;
/// the far edge maps into the last row/column.
GridCoord grid_cell_of(double x, double y, GridShape grid, int scale = 0);

/// Normalized center of a grid cell.
inline std::pair<double, double> cell_center(const GridCoord& c, GridShape grid) {
  return {(c.j + 0.5) / grid.cols, (c.i + 0.5) / grid.rows};
}

/// Cells whose centers fall inside the half-open box extent, in row-major order.
/// Never empty: falls back to the cell holding the (clamped) box center.
std::vector<GridCoord> cells_in_box(const BBox& box, GridShape grid, int scale = 0);

/// Cell holding the box center, with the center clamped to the unit square.
GridCoord center_cell(const BBox& box, GridShape grid, int scale = 0);

class BinaryMask {
 public:
  using Storage = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  BinaryMask() = default;
  BinaryMask(int height, int width);

  int height() const { return static_cast<int>(values_.rows()); }
  int width() const { return static_cast<int>(values_.cols()); }
  std::uint8_t operator()(int u, int v) const { return values_(u, v); }
  std::uint8_t& operator()(int u, int v) { return values_(u, v); }
  const Storage& values() const { return values_; }
  long popcount() const;

 private:
  Storage values_;
};

/// Half-open pixel-center test used by the mask rasterizer.
inline bool pixel_in_box(int u, int v, int height, int width, const BBox& box) {
  const double cy = (u + 0.5) / height;
  const double cx = (v + 0.5) / width;
  return cx >= box.left() && cx < box.right() && cy >= box.top() && cy < box.bottom();
}

/// M(u,v) = 1 iff the center of pixel (row u, column v) lies in at least one box.
BinaryMask rasterize_mask(std::span<const BBox> boxes, int height, int width);

}  // namespace figsep
