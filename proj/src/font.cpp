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

#include "figsep/font.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace figsep {
namespace {

constexpr int kCols = 5;
constexpr int kRows = 8;
using Bitmap = std::array<const char*, kRows>;

// Rows top to bottom; '#' is ink. Lowercase x-height spans rows 2-6, row 7 is
// the descender.
constexpr std::array<Bitmap, 26> kLower = {{
    {".....", ".....", ".###.", "....#", ".####", "#...#", ".####", "....."},  // a
    {"#....", "#....", "####.", "#...#", "#...#", "#...#", "####.", "....."},  // b
    {".....", ".....", ".###.", "#....", "#....", "#....", ".###.", "....."},  // c
    {"....#", "....#", ".####", "#...#", "#...#", "#...#", ".####", "....."},  // d
    {".....", ".....", ".###.", "#...#", "#####", "#....", ".###.", "....."},  // e
    {"..##.", ".#...", "###..", ".#...", ".#...", ".#...", ".#...", "....."},  // f
    {".....", ".....", ".####", "#...#", "#...#", ".####", "....#", ".###."},  // g
    {"#....", "#....", "####.", "#...#", "#...#", "#...#", "#...#", "....."},  // h
    {"..#..", ".....", ".##..", "..#..", "..#..", "..#..", ".###.", "....."},  // i
    {"...#.", ".....", "..##.", "...#.", "...#.", "...#.", "#..#.", ".##.."},  // j
    {"#....", "#....", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "....."},  // k
    {".##..", "..#..", "..#..", "..#..", "..#..", "..#..", ".###.", "....."},  // l
    {".....", ".....", "##.#.", "#.#.#", "#.#.#", "#.#.#", "#.#.#", "....."},  // m
    {".....", ".....", "####.", "#...#", "#...#", "#...#", "#...#", "....."},  // n
    {".....", ".....", ".###.", "#...#", "#...#", "#...#", ".###.", "....."},  // o
    {".....", ".....", "####.", "#...#", "####.", "#....", "#....", "#...."},  // p
    {".....", ".....", ".####", "#...#", ".####", "....#", "....#", "....#"},  // q
    {".....", ".....", "#.##.", "##..#", "#....", "#....", "#....", "....."},  // r
    {".....", ".....", ".####", "#....", ".###.", "....#", "####.", "....."},  // s
    {".#...", ".#...", "####.", ".#...", ".#...", ".#..#", "..##.", "....."},  // t
    {".....", ".....", "#...#", "#...#", "#...#", "#..##", ".##.#", "....."},  // u
    {".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#..", "....."},  // v
    {".....", ".....", "#...#", "#...#", "#.#.#", "#.#.#", ".#.#.", "....."},  // w
    {".....", ".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "....."},  // x
    {".....", ".....", "#...#", "#...#", ".####", "....#", "....#", ".###."},  // y
    {".....", ".....", "#####", "...#.", "..#..", ".#...", "#####", "....."},  // z
}};

constexpr std::array<Bitmap, 26> kUpper = {{
    {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#", "....."},  // A
    {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####.", "....."},  // B
    {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###.", "....."},  // C
    {"####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####.", "....."},  // D
    {"#####", "#....", "#....", "####.", "#....", "#....", "#####", "....."},  // E
    {"#####", "#....", "#....", "####.", "#....", "#....", "#....", "....."},  // F
    {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####", "....."},  // G
    {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#", "....."},  // H
    {".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###.", "....."},  // I
    {"..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##..", "....."},  // J
    {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#", "....."},  // K
    {"#....", "#....", "#....", "#....", "#....", "#....", "#####", "....."},  // L
    {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#", "....."},  // M
    {"#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "....."},  // N
    {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###.", "....."},  // O
    {"####.", "#...#", "#...#", "####.", "#....", "#....", "#....", "....."},  // P
    {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#", "....."},  // Q
    {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#", "....."},  // R
    {".####", "#....", "#....", ".###.", "....#", "....#", "####.", "....."},  // S
    {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#..", "....."},  // T
    {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###.", "....."},  // U
    {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#..", "....."},  // V
    {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#.", "....."},  // W
    {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#", "....."},  // X
    {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#..", "....."},  // Y
    {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####", "....."},  // Z
}};

constexpr Bitmap kOpenParen = {"...#.", "..#..", ".#...", ".#...", ".#...", "..#..", "...#.", "....."};
constexpr Bitmap kCloseParen = {".#...", "..#..", "...#.", "...#.", "...#.", "..#..", ".#...", "....."};
constexpr Bitmap kBlank = {".....", ".....", ".....", ".....", ".....", ".....", ".....", "....."};

const Bitmap& bitmap_for(char c) {
  if (c >= 'a' && c <= 'z') return kLower[c - 'a'];
  if (c >= 'A' && c <= 'Z') return kUpper[c - 'A'];
  if (c == '(') return kOpenParen;
  if (c == ')') return kCloseParen;
  return kBlank;
}

// Face 0 regular, 1 bold (horizontal dilation), 2 slanted.
bool ink(const Bitmap& b, int row, int col, int face) {
  auto at = [&](int r, int c) {
    return r >= 0 && r < kRows && c >= 0 && c < kCols && b[r][c] == '#';
  };
  switch (face) {
    case 1:
      return at(row, col) || at(row, col - 1);
    case 2: {
      // Shear: upper rows shift right by up to one column.
      const int shift = (kRows - 1 - row) / 4;
      return at(row, col - shift);
    }
    default:
      return at(row, col);
  }
}

}  // namespace

const std::vector<std::string>& font_names() {
  static const std::vector<std::string> names = {"bitmap5x8-regular", "bitmap5x8-bold",
                                                 "bitmap5x8-slant"};
  return names;
}

Eigen::MatrixXf render_text(std::string_view text, int face, int height_px) {
  if (height_px < 4) throw std::invalid_argument("render_text: height must be >= 4 px");
  if (face < 0 || face >= static_cast<int>(font_names().size()))
    throw std::invalid_argument("render_text: unknown font face");
  if (text.empty()) return Eigen::MatrixXf::Zero(0, 0);

  // Each character cell is kCols+2 bitmap columns wide (one column of
  // spacing, one spare for bold/slant growth).
  const int cell_cols = kCols + 2;
  const int total_cols = cell_cols * static_cast<int>(text.size());
  const double scale = static_cast<double>(height_px) / kRows;
  const int width_px = std::max(1, static_cast<int>(std::lround(total_cols * scale)));

  constexpr int kSub = 4;
  Eigen::MatrixXf alpha = Eigen::MatrixXf::Zero(height_px, width_px);
  for (int py = 0; py < height_px; ++py) {
    for (int px = 0; px < width_px; ++px) {
      int hits = 0;
      for (int sy = 0; sy < kSub; ++sy) {
        const int row = static_cast<int>((py + (sy + 0.5) / kSub) / scale);
        for (int sx = 0; sx < kSub; ++sx) {
          const int col = static_cast<int>((px + (sx + 0.5) / kSub) / scale);
          const int ch = col / cell_cols;
          if (ch >= static_cast<int>(text.size()) || row >= kRows) continue;
          if (ink(bitmap_for(text[ch]), row, col % cell_cols, face)) ++hits;
        }
      }
      alpha(py, px) = static_cast<float>(hits) / (kSub * kSub);
    }
  }

  // Trim to the inked extent.
  int r0 = height_px, r1 = -1, c0 = width_px, c1 = -1;
  for (int r = 0; r < height_px; ++r)
    for (int c = 0; c < width_px; ++c)
      if (alpha(r, c) > 0.0f) {
        r0 = std::min(r0, r);
        r1 = std::max(r1, r);
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
      }
  if (r1 < 0) return Eigen::MatrixXf::Zero(0, 0);
  return alpha.block(r0, c0, r1 - r0 + 1, c1 - c0 + 1);
}

}  // namespace figsep
