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

#include "figsep/geometry.hpp"

#include <cmath>

namespace figsep {

GridCoord grid_cell_of(double x, double y, GridShape grid, int scale) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
    throw std::invalid_argument("grid_cell_of: point outside the unit square");
  if (grid.rows < 1 || grid.cols < 1) throw std::invalid_argument("grid_cell_of: empty grid");
  const int j = std::min(static_cast<int>(std::floor(x * grid.cols)), grid.cols - 1);
  const int i = std::min(static_cast<int>(std::floor(y * grid.rows)), grid.rows - 1);
  return GridCoord{i, j, scale};
}

GridCoord center_cell(const BBox& box, GridShape grid, int scale) {
  return grid_cell_of(std::clamp(box.x, 0.0, 1.0), std::clamp(box.y, 0.0, 1.0), grid, scale);
}

std::vector<GridCoord> cells_in_box(const BBox& box, GridShape grid, int scale) {
  std::vector<GridCoord> cells;
  // Only rows/columns whose centers can satisfy the half-open test.
  const int i0 = std::max(0, static_cast<int>(std::floor(box.top() * grid.rows - 0.5)));
  const int i1 = std::min(grid.rows - 1, static_cast<int>(std::ceil(box.bottom() * grid.rows)));
  const int j0 = std::max(0, static_cast<int>(std::floor(box.left() * grid.cols - 0.5)));
  const int j1 = std::min(grid.cols - 1, static_cast<int>(std::ceil(box.right() * grid.cols)));
  for (int i = i0; i <= i1; ++i) {
    const double cy = (i + 0.5) / grid.rows;
    if (cy < box.top() || cy >= box.bottom()) continue;
    for (int j = j0; j <= j1; ++j) {
      const double cx = (j + 0.5) / grid.cols;
      if (cx >= box.left() && cx < box.right()) cells.push_back(GridCoord{i, j, scale});
    }
  }
  if (cells.empty()) cells.push_back(center_cell(box, grid, scale));
  return cells;
}

BinaryMask::BinaryMask(int height, int width) {
  if (height < 1 || width < 1) throw std::invalid_argument("BinaryMask: dimensions must be >= 1");
  values_ = Storage::Zero(height, width);
}

long BinaryMask::popcount() const { return values_.cast<long>().sum(); }

BinaryMask rasterize_mask(std::span<const BBox> boxes, int height, int width) {
  BinaryMask mask(height, width);
  for (const BBox& box : boxes) {
    // Candidate ranges, widened by one and then filtered with the exact
    // pixel_in_box predicate so rounding never disagrees with it.
    const int u0 = std::max(0, static_cast<int>(std::ceil(box.top() * height - 0.5)) - 1);
    const int u1 = std::min(height, static_cast<int>(std::ceil(box.bottom() * height - 0.5)) + 1);
    const int v0 = std::max(0, static_cast<int>(std::ceil(box.left() * width - 0.5)) - 1);
    const int v1 = std::min(width, static_cast<int>(std::ceil(box.right() * width - 0.5)) + 1);
    for (int u = u0; u < u1; ++u) {
      const double cy = (u + 0.5) / height;
      if (cy < box.top() || cy >= box.bottom()) continue;
      for (int v = v0; v < v1; ++v) {
        const double cx = (v + 0.5) / width;
        if (cx >= box.left() && cx < box.right()) mask(u, v) = 1;
      }
    }
  }
  return mask;
}

}  // namespace figsep
