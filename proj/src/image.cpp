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

#include "figsep/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace figsep {

Image::Image(int height, int width, Rgb fill) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw std::invalid_argument("Image: dimensions must be >= 1");
  pixels_.resize(static_cast<std::size_t>(height) * width * 3);
  for (std::size_t k = 0; k < pixels_.size(); k += 3) {
    pixels_[k] = fill[0];
    pixels_[k + 1] = fill[1];
    pixels_[k + 2] = fill[2];
  }
}

void Image::blend(int y, int x, Rgb c, double alpha) {
  if (y < 0 || x < 0 || y >= height_ || x >= width_ || alpha <= 0.0) return;
  alpha = std::min(alpha, 1.0);
  const auto k = index(y, x);
  for (int ch = 0; ch < 3; ++ch) {
    const double v = pixels_[k + ch] * (1.0 - alpha) + c[ch] * alpha;
    pixels_[k + ch] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
  }
}

void Image::fill_rect(int y0, int x0, int y1, int x1, Rgb c) {
  y0 = std::max(y0, 0);
  x0 = std::max(x0, 0);
  y1 = std::min(y1, height_);
  x1 = std::min(x1, width_);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) set(y, x, c);
}

Image resize_bilinear(const Image& src, int height, int width) {
  Image dst(height, width);
  const double sy = static_cast<double>(src.height()) / height;
  const double sx = static_cast<double>(src.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = src.at(y0, x0, c) * (1 - wx) + src.at(y0, x1, c) * wx;
        const double bot = src.at(y1, x0, c) * (1 - wx) + src.at(y1, x1, c) * wx;
        dst.at(y, x, c) = static_cast<std::uint8_t>(std::lround(top * (1 - wy) + bot * wy));
      }
    }
  }
  return dst;
}

Image crop(const Image& src, int y0, int x0, int y1, int x1) {
  if (y0 < 0 || x0 < 0 || y1 > src.height() || x1 > src.width() || y1 <= y0 || x1 <= x0)
    throw std::invalid_argument("crop: rectangle outside the image");
  Image dst(y1 - y0, x1 - x0);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) dst.set(y - y0, x - x0, src.pixel(y, x));
  return dst;
}

PixelRect pixel_rect(const BBox& box, int height, int width) {
  auto lo = [](double edge, int n) {
    return std::clamp(static_cast<int>(std::ceil(edge * n - 0.5)), 0, n);
  };
  return PixelRect{lo(box.top(), height), lo(box.left(), width), lo(box.bottom(), height),
                   lo(box.right(), width)};
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw ImageIoError("cannot read PNG " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(img.height), static_cast<int>(img.width));
  if (!png_image_finish_read(&img, nullptr, out.pixels().data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw ImageIoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw ImageIoError("cannot open " + path.string() + " for writing");
  if (!png_image_write_to_stdio(&img, file.get(), 0, image.pixels().data(), 0, nullptr))
    throw ImageIoError("cannot encode PNG " + path.string() + ": " + img.message);
}

}  // namespace figsep
