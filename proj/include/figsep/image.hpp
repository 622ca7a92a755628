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

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "figsep/geometry.hpp"

namespace figsep {

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB raster, row-major, interleaved channels.
class Image {
 public:
  Image() = default;
  Image(int height, int width, Rgb fill = {255, 255, 255});

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t& at(int y, int x, int c) { return pixels_[index(y, x) + c]; }
  std::uint8_t at(int y, int x, int c) const { return pixels_[index(y, x) + c]; }
  Rgb pixel(int y, int x) const {
    const auto k = index(y, x);
    return {pixels_[k], pixels_[k + 1], pixels_[k + 2]};
  }
  void set(int y, int x, Rgb c) {
    const auto k = index(y, x);
    pixels_[k] = c[0];
    pixels_[k + 1] = c[1];
    pixels_[k + 2] = c[2];
  }
  /// Alpha-blends `c` over the pixel; coordinates outside the raster are ignored.
  void blend(int y, int x, Rgb c, double alpha);
  void fill_rect(int y0, int x0, int y1, int x1, Rgb c);

  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::vector<std::uint8_t>& pixels() { return pixels_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int y, int x) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int height_{0};
  int width_{0};
  std::vector<std::uint8_t> pixels_;
};

/// Bilinear resampling with pixel-center alignment.
Image resize_bilinear(const Image& src, int height, int width);

/// Copies the pixel rectangle [y0,y1) x [x0,x1); the rectangle must lie inside the image.
Image crop(const Image& src, int y0, int x0, int y1, int x1);

/// Pixel rectangle covered by a normalized box, clipped to the image. Pixels whose
/// centers lie in the half-open box extent are included.
struct PixelRect {
  int y0{0}, x0{0}, y1{0}, x1{0};
  bool empty() const { return y1 <= y0 || x1 <= x0; }
};
PixelRect pixel_rect(const BBox& box, int height, int width);

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Image read_png(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace figsep
