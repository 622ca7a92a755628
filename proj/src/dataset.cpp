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

#include "figsep/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "figsep/font.hpp"
#include "figsep/random.hpp"
#include "json.hpp"

namespace figsep {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Alphabet

Alphabet::Alphabet(std::vector<LabelClass> classes) : classes_(std::move(classes)) {
  std::set<std::string> seen;
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    if (classes_[k].id != static_cast<int>(k) + 1)
      throw std::invalid_argument("Alphabet: class ids must be contiguous from 1");
    if (!seen.insert(classes_[k].glyph).second)
      throw std::invalid_argument("Alphabet: duplicate glyph '" + classes_[k].glyph + "'");
    for (const auto& v : classes_[k].variants)
      if (!seen.insert(v).second)
        throw std::invalid_argument("Alphabet: duplicate glyph variant '" + v + "'");
  }
}

Alphabet Alphabet::lowercase(int count) {
  if (count < 1 || count > 26) throw std::invalid_argument("Alphabet::lowercase: count in [1,26]");
  std::vector<LabelClass> classes;
  for (int k = 0; k < count; ++k) {
    const char c = static_cast<char>('a' + k);
    const char u = static_cast<char>('A' + k);
    classes.push_back(LabelClass{k + 1, std::string(1, c),
                                 {std::string(1, u), "(" + std::string(1, c) + ")"}});
  }
  return Alphabet(std::move(classes));
}

const LabelClass& Alphabet::at(int id) const {
  if (id < 1 || id > size()) throw std::out_of_range("Alphabet: unknown class id " + std::to_string(id));
  return classes_[id - 1];
}

std::optional<int> Alphabet::find(std::string_view glyph) const {
  for (const auto& c : classes_) {
    if (c.glyph == glyph) return c.id;
    for (const auto& v : c.variants)
      if (v == glyph) return c.id;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Validation and persistence

void validate_record(const FigureRecord& r, double tolerance) {
  using K = CorpusError::Kind;
  std::set<int> label_classes;
  for (const auto& l : r.label_boxes) {
    if (!l.box.valid()) throw CorpusError(K::kInvalidRecord, r.image_id, "label box with non-positive extent");
    if (l.cls < 1) throw CorpusError(K::kInvalidRecord, r.image_id, "label box without a class");
    if (!label_classes.insert(l.cls).second)
      throw CorpusError(K::kInvalidRecord, r.image_id,
                        "label class " + std::to_string(l.cls) + " appears more than once");
  }
  std::set<int> subfig_classes;
  for (const auto& s : r.subfig_boxes) {
    if (!s.box.valid()) throw CorpusError(K::kInvalidRecord, r.image_id, "subfigure box with non-positive extent");
    if (!label_classes.count(s.cls))
      throw CorpusError(K::kDanglingLabel, r.image_id,
                        "subfigure references label class " + std::to_string(s.cls) +
                            " absent from the label boxes");
    if (!subfig_classes.insert(s.cls).second)
      throw CorpusError(K::kInvalidRecord, r.image_id,
                        "two subfigures share label class " + std::to_string(s.cls));
    const auto& label = *std::find_if(r.label_boxes.begin(), r.label_boxes.end(),
                                      [&](const LabeledBox& l) { return l.cls == s.cls; });
    const BBox lc = label.box.clipped();
    const BBox sc = s.box.clipped();
    if (lc.left() < sc.left() - tolerance || lc.right() > sc.right() + tolerance ||
        lc.top() < sc.top() - tolerance || lc.bottom() > sc.bottom() + tolerance)
      throw CorpusError(K::kInvalidRecord, r.image_id,
                        "label box of class " + std::to_string(s.cls) + " lies outside its subfigure");
  }
}

namespace {

json box_json(const BBox& b, const std::string& cls) {
  return json{{"class", cls}, {"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
}

std::pair<BBox, int> parse_box(const json& j, const Alphabet& alphabet, const std::string& id) {
  using K = CorpusError::Kind;
  if (!j.is_object()) throw CorpusError(K::kMalformedAnnotation, id, "box entry is not an object");
  for (const char* key : {"class", "x", "y", "w", "h"})
    if (!j.contains(key)) throw CorpusError(K::kMalformedAnnotation, id, std::string("box missing '") + key + "'");
  if (!j["class"].is_string())
    throw CorpusError(K::kMalformedAnnotation, id, "box 'class' must be a string");
  const auto glyph = j["class"].get<std::string>();
  const auto cls = alphabet.find(glyph);
  if (!cls) throw CorpusError(K::kUnknownClass, id, "unknown label class '" + glyph + "'");
  BBox b;
  try {
    b = BBox{j["x"].get<double>(), j["y"].get<double>(), j["w"].get<double>(), j["h"].get<double>()};
  } catch (const json::exception& e) {
    throw CorpusError(K::kMalformedAnnotation, id, std::string("box coordinates: ") + e.what());
  }
  return {b, *cls};
}

}  // namespace

std::vector<FigureRecord> load_corpus(const fs::path& dir, const Alphabet& alphabet) {
  using K = CorpusError::Kind;
  std::vector<FigureRecord> records;
  const fs::path index = dir / "annotations.jsonl";
  if (!fs::exists(index)) return records;
  std::ifstream in(index);
  if (!in) throw CorpusError(K::kIo, "", "cannot open " + index.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw CorpusError(K::kMalformedAnnotation, "line " + std::to_string(line_no), e.what());
    }
    if (!j.is_object() || !j.contains("image_id") || !j["image_id"].is_string())
      throw CorpusError(K::kMalformedAnnotation, "line " + std::to_string(line_no), "missing image_id");
    FigureRecord r;
    r.image_id = j["image_id"].get<std::string>();
    for (const char* key : {"width", "height", "labels", "subfigures"})
      if (!j.contains(key)) throw CorpusError(K::kMalformedAnnotation, r.image_id, std::string("missing '") + key + "'");
    if (!j["labels"].is_array() || !j["subfigures"].is_array())
      throw CorpusError(K::kMalformedAnnotation, r.image_id, "'labels' and 'subfigures' must be arrays");
    for (const auto& lj : j["labels"]) {
      auto [b, cls] = parse_box(lj, alphabet, r.image_id);
      r.label_boxes.push_back(LabeledBox{b, cls, 1.0});
    }
    for (const auto& sj : j["subfigures"]) {
      auto [b, cls] = parse_box(sj, alphabet, r.image_id);
      r.subfig_boxes.push_back(SubfigureBox{b, cls});
    }
    for (const auto& s : r.subfig_boxes)
      if (std::none_of(r.label_boxes.begin(), r.label_boxes.end(),
                       [&](const LabeledBox& l) { return l.cls == s.cls; }))
        throw CorpusError(K::kDanglingLabel, r.image_id,
                          "subfigure '" + alphabet.glyph(s.cls) + "' has no label box");
    const fs::path image_path = dir / "images" / (r.image_id + ".png");
    if (!fs::exists(image_path))
      throw CorpusError(K::kMissingImage, r.image_id, "missing image " + image_path.string());
    try {
      r.image = read_png(image_path);
    } catch (const ImageIoError& e) {
      throw CorpusError(K::kMissingImage, r.image_id, e.what());
    }
    if (r.image.width() != j["width"].get<int>() || r.image.height() != j["height"].get<int>())
      throw CorpusError(K::kMalformedAnnotation, r.image_id, "image size disagrees with annotation");
    validate_record(r);
    records.push_back(std::move(r));
  }
  return records;
}

void save_corpus(std::span<const FigureRecord> records, const fs::path& dir, const Alphabet& alphabet) {
  using K = CorpusError::Kind;
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  if (ec) throw CorpusError(K::kIo, "", "cannot create " + dir.string() + ": " + ec.message());
  std::ofstream out(dir / "annotations.jsonl", std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError(K::kIo, "", "cannot write " + (dir / "annotations.jsonl").string());
  for (const auto& r : records) {
    validate_record(r);
    json j;
    j["image_id"] = r.image_id;
    j["width"] = r.image.width();
    j["height"] = r.image.height();
    j["labels"] = json::array();
    for (const auto& l : r.label_boxes) j["labels"].push_back(box_json(l.box, alphabet.glyph(l.cls)));
    j["subfigures"] = json::array();
    for (const auto& s : r.subfig_boxes)
      j["subfigures"].push_back(box_json(s.box, alphabet.glyph(s.cls)));
    out << j.dump() << '\n';
    try {
      write_png(r.image, dir / "images" / (r.image_id + ".png"));
    } catch (const ImageIoError& e) {
      throw CorpusError(K::kIo, r.image_id, e.what());
    }
  }
  if (!out) throw CorpusError(K::kIo, "", "write failure on annotations index");
}

// ---------------------------------------------------------------------------
// Rendering helpers

std::string_view to_string(LabelPosition p) {
  switch (p) {
    case LabelPosition::kCorner: return "corner";
    case LabelPosition::kAbove: return "above";
    case LabelPosition::kBelow: return "below";
  }
  return "corner";
}

LabelPosition label_position_from_string(std::string_view s) {
  if (s == "corner") return LabelPosition::kCorner;
  if (s == "above") return LabelPosition::kAbove;
  if (s == "below") return LabelPosition::kBelow;
  throw std::invalid_argument("unknown label position '" + std::string(s) + "'");
}

BBox stamp_label(Image& image, std::string_view text, int face, int height_px, Rgb color, int top,
                 int left, bool backing_box) {
  const Eigen::MatrixXf alpha = render_text(text, face, height_px);
  const int gh = static_cast<int>(alpha.rows());
  const int gw = static_cast<int>(alpha.cols());
  if (backing_box) {
    const int lum = (color[0] + color[1] + color[2]) / 3;
    const Rgb back = lum < 128 ? Rgb{255, 255, 255} : Rgb{0, 0, 0};
    image.fill_rect(top - 2, left - 2, top + gh + 2, left + gw + 2, back);
  }
  for (int y = 0; y < gh; ++y)
    for (int x = 0; x < gw; ++x) image.blend(top + y, left + x, color, alpha(y, x));
  const double W = image.width();
  const double H = image.height();
  return BBox::from_corners((left - 1) / W, (top - 1) / H, (left + gw + 1) / W, (top + gh + 1) / H);
}

namespace {

struct Rect {
  int y0, x0, y1, x1;
  int h() const { return y1 - y0; }
  int w() const { return x1 - x0; }
};

Rgb random_color(Rng& rng, int lo = 0, int hi = 255) {
  return {static_cast<std::uint8_t>(uniform_int(rng, lo, hi)),
          static_cast<std::uint8_t>(uniform_int(rng, lo, hi)),
          static_cast<std::uint8_t>(uniform_int(rng, lo, hi))};
}

int luminance(Rgb c) { return (299 * c[0] + 587 * c[1] + 114 * c[2]) / 1000; }

void draw_line(Image& img, double y0, double x0, double y1, double x1, Rgb c, double thick) {
  const double len = std::hypot(y1 - y0, x1 - x0);
  const int steps = std::max(1, static_cast<int>(len * 2));
  const int r = static_cast<int>(std::ceil(thick / 2));
  for (int s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    const int cy = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
    const int cx = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
    for (int dy = -r + 1; dy <= r - 1 || dy == 0; ++dy)
      for (int dx = -r + 1; dx <= r - 1 || dx == 0; ++dx) img.blend(cy + dy, cx + dx, c, 1.0);
  }
}

void draw_frame(Image& img, const Rect& r, Rgb c) {
  img.fill_rect(r.y0, r.x0, r.y0 + 1, r.x1, c);
  img.fill_rect(r.y1 - 1, r.x0, r.y1, r.x1, c);
  img.fill_rect(r.y0, r.x0, r.y1, r.x0 + 1, c);
  img.fill_rect(r.y0, r.x1 - 1, r.y1, r.x1, c);
}

// Panel content: gradient photos, blob micrographs, shape collages, line
// plots and bar charts. Content stays inside the rectangle.
void draw_panel(Image& img, const Rect& r, Rng& rng) {
  const int kind = uniform_int(rng, 0, 4);
  switch (kind) {
    case 0: {  // two-colour gradient with soft shapes
      const Rgb a = random_color(rng, 40, 230), b = random_color(rng, 40, 230);
      const bool horizontal = bernoulli(rng, 0.5);
      for (int y = r.y0; y < r.y1; ++y)
        for (int x = r.x0; x < r.x1; ++x) {
          const double t = horizontal ? double(x - r.x0) / std::max(1, r.w() - 1)
                                      : double(y - r.y0) / std::max(1, r.h() - 1);
          img.set(y, x, {static_cast<std::uint8_t>(a[0] + t * (b[0] - a[0])),
                         static_cast<std::uint8_t>(a[1] + t * (b[1] - a[1])),
                         static_cast<std::uint8_t>(a[2] + t * (b[2] - a[2]))});
        }
      const int n = uniform_int(rng, 1, 4);
      for (int k = 0; k < n; ++k) {
        const double cy = uniform(rng, r.y0, r.y1), cx = uniform(rng, r.x0, r.x1);
        const double rad = uniform(rng, 0.1, 0.3) * std::min(r.h(), r.w());
        const Rgb c = random_color(rng, 20, 240);
        for (int y = r.y0; y < r.y1; ++y)
          for (int x = r.x0; x < r.x1; ++x) {
            const double d = std::hypot(y - cy, x - cx) / rad;
            if (d < 1.0) img.blend(y, x, c, 0.8 * (1.0 - d * d));
          }
      }
      break;
    }
    case 1: {  // grayscale micrograph: dark field with bright blobs
      const int base = uniform_int(rng, 10, 90);
      img.fill_rect(r.y0, r.x0, r.y1, r.x1, {std::uint8_t(base), std::uint8_t(base), std::uint8_t(base)});
      const int n = uniform_int(rng, 4, 14);
      for (int k = 0; k < n; ++k) {
        const double cy = uniform(rng, r.y0, r.y1), cx = uniform(rng, r.x0, r.x1);
        const double rad = uniform(rng, 2.0, 0.15 * std::min(r.h(), r.w()) + 3.0);
        const std::uint8_t v = static_cast<std::uint8_t>(uniform_int(rng, 140, 255));
        const int y0 = std::max(r.y0, int(cy - 3 * rad)), y1 = std::min(r.y1, int(cy + 3 * rad) + 1);
        const int x0 = std::max(r.x0, int(cx - 3 * rad)), x1 = std::min(r.x1, int(cx + 3 * rad) + 1);
        for (int y = y0; y < y1; ++y)
          for (int x = x0; x < x1; ++x) {
            const double d2 = ((y - cy) * (y - cy) + (x - cx) * (x - cx)) / (rad * rad);
            img.blend(y, x, {v, v, v}, std::exp(-d2));
          }
      }
      break;
    }
    case 2: {  // flat shapes on a light background
      img.fill_rect(r.y0, r.x0, r.y1, r.x1, random_color(rng, 200, 250));
      const int n = uniform_int(rng, 2, 7);
      for (int k = 0; k < n; ++k) {
        const Rgb c = random_color(rng, 0, 220);
        const int hh = uniform_int(rng, 3, std::max(4, r.h() / 2));
        const int ww = uniform_int(rng, 3, std::max(4, r.w() / 2));
        const int y = uniform_int(rng, r.y0, std::max(r.y0, r.y1 - hh));
        const int x = uniform_int(rng, r.x0, std::max(r.x0, r.x1 - ww));
        if (bernoulli(rng, 0.5)) {
          img.fill_rect(y, x, y + hh, x + ww, c);
        } else {
          const double cy = y + hh / 2.0, cx = x + ww / 2.0;
          for (int yy = y; yy < y + hh; ++yy)
            for (int xx = x; xx < x + ww; ++xx) {
              const double dy = (yy + 0.5 - cy) / (hh / 2.0), dx = (xx + 0.5 - cx) / (ww / 2.0);
              if (dy * dy + dx * dx <= 1.0) img.set(yy, xx, c);
            }
        }
      }
      draw_frame(img, r, random_color(rng, 0, 120));
      break;
    }
    case 3: {  // line plot
      img.fill_rect(r.y0, r.x0, r.y1, r.x1, {255, 255, 255});
      const Rgb axis{0, 0, 0};
      const int ox = r.x0 + std::max(3, r.w() / 10), oy = r.y1 - std::max(3, r.h() / 10);
      draw_frame(img, r, {90, 90, 90});
      draw_line(img, oy, ox, r.y0 + 3, ox, axis, 1);
      draw_line(img, oy, ox, oy, r.x1 - 3, axis, 1);
      for (int t = 0; t < 5; ++t) {
        const double tx = ox + (r.x1 - 3 - ox) * (t + 1) / 5.0;
        draw_line(img, oy, tx, oy + 2, tx, axis, 1);
      }
      const int curves = uniform_int(rng, 1, 3);
      for (int c = 0; c < curves; ++c) {
        const Rgb col = random_color(rng, 0, 200);
        const double amp = uniform(rng, 0.1, 0.4), freq = uniform(rng, 0.5, 3.0), ph = uniform(rng, 0, 6.3);
        const double lvl = uniform(rng, 0.3, 0.7);
        const int npts = 24;
        double py = 0, px = 0;
        for (int p = 0; p <= npts; ++p) {
          const double t = double(p) / npts;
          const double x = ox + t * (r.x1 - 4 - ox);
          const double v = std::clamp(lvl + amp * std::sin(freq * 6.28 * t + ph), 0.05, 0.95);
          const double y = oy - v * (oy - r.y0 - 4);
          if (p > 0) draw_line(img, py, px, y, x, col, uniform(rng, 1.0, 2.0));
          py = y;
          px = x;
        }
      }
      break;
    }
    default: {  // bar chart
      img.fill_rect(r.y0, r.x0, r.y1, r.x1, random_color(rng, 235, 255));
      const int bars = uniform_int(rng, 3, 8);
      const int ox = r.x0 + std::max(3, r.w() / 10), oy = r.y1 - std::max(3, r.h() / 10);
      const double bw = double(r.x1 - 3 - ox) / bars;
      const Rgb col = random_color(rng, 0, 200);
      for (int b = 0; b < bars; ++b) {
        const int hh = static_cast<int>(uniform(rng, 0.15, 0.95) * (oy - r.y0 - 3));
        img.fill_rect(oy - hh, int(ox + b * bw + 1), oy, int(ox + (b + 1) * bw - 1),
                      bernoulli(rng, 0.3) ? random_color(rng, 0, 200) : col);
      }
      draw_line(img, oy, ox, r.y0 + 2, ox, {0, 0, 0}, 1);
      draw_line(img, oy, ox, oy, r.x1 - 2, {0, 0, 0}, 1);
      draw_frame(img, r, {60, 60, 60});
      break;
    }
  }
}

std::vector<int> split_lengths(int total, int parts, double jitter, Rng& rng) {
  std::vector<double> w(parts);
  for (auto& x : w) x = uniform(rng, 1.0 - jitter, 1.0 + jitter);
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<int> out(parts);
  int used = 0;
  for (int k = 0; k < parts; ++k) {
    out[k] = k + 1 == parts ? total - used : static_cast<int>(std::lround(total * w[k] / sum));
    used += out[k];
  }
  return out;
}

Rgb mean_color(const Image& img, const Rect& r) {
  long s[3] = {0, 0, 0};
  long n = 0;
  for (int y = std::max(0, r.y0); y < std::min(img.height(), r.y1); ++y)
    for (int x = std::max(0, r.x0); x < std::min(img.width(), r.x1); ++x) {
      for (int c = 0; c < 3; ++c) s[c] += img.at(y, x, c);
      ++n;
    }
  if (n == 0) return {255, 255, 255};
  return {std::uint8_t(s[0] / n), std::uint8_t(s[1] / n), std::uint8_t(s[2] / n)};
}

std::string pick_text(const LabelClass& cls, double variant_prob, Rng& rng) {
  if (!cls.variants.empty() && bernoulli(rng, variant_prob))
    return cls.variants[uniform_int(rng, 0, static_cast<int>(cls.variants.size()) - 1)];
  return cls.glyph;
}

// Dark glyph on light surroundings, light glyph on dark ones.
Rgb contrasting_ink(Rgb background, Rng& rng) {
  if (luminance(background) > 110) {
    return bernoulli(rng, 0.7) ? Rgb{0, 0, 0} : random_color(rng, 0, 70);
  }
  return bernoulli(rng, 0.7) ? Rgb{255, 255, 255} : random_color(rng, 200, 255);
}

}  // namespace

FigureRecord generate_synthetic_figure(const SyntheticLayoutSpec& spec, std::uint64_t seed) {
  if (spec.rows < 1 || spec.cols < 1) throw std::invalid_argument("layout: rows and cols must be >= 1");
  if (spec.n_subfigures < 1 || spec.n_subfigures > spec.rows * spec.cols)
    throw std::invalid_argument("layout: n_subfigures must be in [1, rows*cols]");
  if (spec.alphabet.size() < spec.n_subfigures)
    throw std::invalid_argument("layout: alphabet smaller than n_subfigures");
  if (!spec.classes.empty() && static_cast<int>(spec.classes.size()) != spec.n_subfigures)
    throw std::invalid_argument("layout: classes must list one id per subfigure");
  if (spec.width < 32 || spec.height < 32) throw std::invalid_argument("layout: canvas too small");

  Rng rng(mix_seed(seed, 0xF16));
  FigureRecord rec;
  rec.image_id = spec.image_id.empty() ? "fig_" + std::to_string(seed) : spec.image_id;
  rec.image = Image(spec.height, spec.width, {255, 255, 255});

  const int margin = uniform_int(rng, 3, 7);
  const int gutter = uniform_int(rng, 6, 12);
  const auto col_w = split_lengths(spec.width - 2 * margin - (spec.cols - 1) * gutter, spec.cols,
                                   spec.jitter, rng);
  const auto row_h = split_lengths(spec.height - 2 * margin - (spec.rows - 1) * gutter, spec.rows,
                                   spec.jitter, rng);

  // Occupied cells: a random subset of size n, kept in reading order.
  std::vector<int> cells(spec.rows * spec.cols);
  std::iota(cells.begin(), cells.end(), 0);
  std::shuffle(cells.begin(), cells.end(), rng);
  cells.resize(spec.n_subfigures);
  std::sort(cells.begin(), cells.end());

  for (int p = 0; p < spec.n_subfigures; ++p) {
    const int row = cells[p] / spec.cols, col = cells[p] % spec.cols;
    Rect cell{margin, margin, 0, 0};
    for (int k = 0; k < row; ++k) cell.y0 += row_h[k] + gutter;
    for (int k = 0; k < col; ++k) cell.x0 += col_w[k] + gutter;
    cell.y1 = cell.y0 + row_h[row];
    cell.x1 = cell.x0 + col_w[col];

    // Per-panel inset inside its cell.
    const int max_in_y = static_cast<int>(spec.jitter * 0.3 * cell.h());
    const int max_in_x = static_cast<int>(spec.jitter * 0.3 * cell.w());
    Rect panel{cell.y0 + uniform_int(rng, 0, max_in_y), cell.x0 + uniform_int(rng, 0, max_in_x),
               cell.y1 - uniform_int(rng, 0, max_in_y), cell.x1 - uniform_int(rng, 0, max_in_x)};

    const int cls = spec.classes.empty() ? p + 1 : spec.classes[p];
    const LabelClass& label = spec.alphabet.at(cls);
    const std::string text = pick_text(label, spec.variant_prob, rng);
    const int face = uniform_int(rng, 0, static_cast<int>(font_names().size()) - 1);
    int glyph_px = uniform_int(rng, spec.glyph_min_px, spec.glyph_max_px);
    glyph_px = std::max(4, std::min(glyph_px, panel.h() / 3));
    const Eigen::MatrixXf ink = render_text(text, face, glyph_px);
    const int gh = static_cast<int>(ink.rows()), gw = static_cast<int>(ink.cols());

    int top = 0, left = 0;
    bool backing = false;
    Rgb ink_color{0, 0, 0};
    const int inset = uniform_int(rng, 2, 4);
    switch (spec.label_position) {
      case LabelPosition::kCorner:
        draw_panel(rec.image, panel, rng);
        top = panel.y0 + inset;
        left = panel.x0 + inset;
        backing = bernoulli(rng, 0.4);
        ink_color = backing ? (bernoulli(rng, 0.8) ? Rgb{0, 0, 0} : Rgb{255, 255, 255})
                            : contrasting_ink(mean_color(rec.image, {top, left, top + gh, left + gw}), rng);
        break;
      case LabelPosition::kAbove:
      case LabelPosition::kBelow: {
        const int strip = gh + 4;
        const bool above = spec.label_position == LabelPosition::kAbove;
        if (above) {
          top = panel.y0 + 1;
          panel.y0 += strip;
        } else {
          panel.y1 -= strip;
          top = panel.y1 + 3;
        }
        left = bernoulli(rng, 0.6) ? panel.x0 + 1 : panel.x0 + (panel.w() - gw) / 2;
        draw_panel(rec.image, panel, rng);
        ink_color = contrasting_ink({255, 255, 255}, rng);
        break;
      }
    }
    const BBox label_box =
        stamp_label(rec.image, text, face, glyph_px, ink_color, top, left, backing);
    const double W = spec.width, H = spec.height;
    const BBox panel_box = BBox::from_corners(panel.x0 / W, panel.y0 / H, panel.x1 / W, panel.y1 / H);
    rec.label_boxes.push_back(LabeledBox{label_box, cls, 1.0});
    rec.subfig_boxes.push_back(SubfigureBox{enclosing(panel_box, label_box), cls});
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Class sampling and corpus generation

ImbalanceProfile ImbalanceProfile::figure_label_default(int count) {
  // Geometric decay: the first index is ~12x as common as the ninth.
  ImbalanceProfile p;
  for (int k = 0; k < count; ++k) p.weights.push_back(std::pow(0.73, k));
  return p;
}

ImbalanceProfile ImbalanceProfile::uniform(int count) {
  return ImbalanceProfile{std::vector<double>(count, 1.0)};
}

namespace {

void check_profile(const ImbalanceProfile& profile) {
  if (profile.weights.empty()) throw std::invalid_argument("imbalance profile is empty");
  bool positive = false;
  for (double w : profile.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("imbalance weights must be >= 0");
    positive = positive || w > 0.0;
  }
  if (!positive) throw std::invalid_argument("imbalance profile has no positive weight");
}

// Weighted draw without replacement; zero-weight classes are used only once
// the positive ones are exhausted.
std::vector<int> weighted_subset(const std::vector<double>& w, int n, Rng& rng) {
  std::vector<bool> taken(w.size(), false);
  std::vector<int> out;
  for (int k = 0; k < n; ++k) {
    double sum = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c)
      if (!taken[c]) sum += w[c];
    int pick = -1;
    if (sum > 0.0) {
      double u = uniform(rng, 0.0, sum);
      for (std::size_t c = 0; c < w.size(); ++c) {
        if (taken[c] || w[c] <= 0.0) continue;
        pick = static_cast<int>(c);
        if (u < w[c]) break;
        u -= w[c];
      }
    } else {
      for (std::size_t c = 0; c < w.size() && pick < 0; ++c)
        if (!taken[c]) pick = static_cast<int>(c);
    }
    taken[pick] = true;
    out.push_back(pick + 1);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<int> sample_imbalanced(const ImbalanceProfile& profile, int n, std::uint64_t seed) {
  check_profile(profile);
  if (n < 0) throw std::invalid_argument("sample_imbalanced: n must be >= 0");
  Rng rng(mix_seed(seed, 0x1B));
  std::discrete_distribution<int> dist(profile.weights.begin(), profile.weights.end());
  std::vector<int> out(n);
  for (auto& c : out) c = dist(rng) + 1;
  return out;
}

std::vector<FigureRecord> generate_corpus(const CorpusSpec& spec, int count, std::uint64_t seed,
                                          const std::string& prefix) {
  check_profile(spec.profile);
  if (static_cast<int>(spec.profile.weights.size()) != spec.alphabet.size())
    throw std::invalid_argument("corpus: profile and alphabet sizes differ");
  std::vector<FigureRecord> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    const std::uint64_t fig_seed = mix_seed(seed, static_cast<std::uint64_t>(k));
    Rng rng(mix_seed(fig_seed, 0xC0));
    SyntheticLayoutSpec s;
    s.alphabet = spec.alphabet;
    s.jitter = spec.jitter;
    s.variant_prob = spec.variant_prob;
    s.rows = uniform_int(rng, spec.min_rows, spec.max_rows);
    s.cols = uniform_int(rng, spec.min_cols, spec.max_cols);
    const int cap = std::min({s.rows * s.cols, spec.max_subfigures, spec.alphabet.size()});
    s.n_subfigures = bernoulli(rng, spec.full_grid_prob) ? cap : uniform_int(rng, 1, cap);
    const double pos = uniform(rng, 0.0, 1.0);
    s.label_position = pos < spec.corner_prob ? LabelPosition::kCorner
                       : pos < spec.corner_prob + spec.above_prob ? LabelPosition::kAbove
                                                                  : LabelPosition::kBelow;
    s.width = uniform_int(rng, spec.min_size, spec.max_size);
    s.height = uniform_int(rng, spec.min_size, spec.max_size);
    s.classes = weighted_subset(spec.profile.weights, s.n_subfigures, rng);
    s.image_id = prefix + std::to_string(k);
    out.push_back(generate_synthetic_figure(s, fig_seed));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classifier patches

Image crop_square_patch(const Image& image, const BBox& box, double padding, int size) {
  const double W = image.width(), H = image.height();
  const double side = std::max(box.w * W, box.h * H) * (1.0 + 2.0 * padding);
  const double cx = box.x * W, cy = box.y * H;
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - side / 2)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - side / 2)));
  const int x1 = std::min(image.width(), static_cast<int>(std::ceil(cx + side / 2)));
  const int y1 = std::min(image.height(), static_cast<int>(std::ceil(cy + side / 2)));
  if (x1 <= x0 || y1 <= y0) throw std::invalid_argument("crop: box does not overlap the image");
  return resize_bilinear(crop(image, y0, x0, y1, x1), size, size);
}

LabelPatch generate_label_patch(std::span<const FigureRecord> corpus, const Alphabet& alphabet,
                                std::uint64_t seed, const PatchOptions& options) {
  if (corpus.empty()) throw std::invalid_argument("generate_label_patch: empty corpus");
  if (alphabet.empty()) throw std::invalid_argument("generate_label_patch: empty alphabet");
  Rng rng(mix_seed(seed, 0x9A7C));
  const FigureRecord& fig = corpus[uniform_int(rng, 0, static_cast<int>(corpus.size()) - 1)];
  const Image& src = fig.image;

  LabelPatch out;
  const bool background = bernoulli(rng, options.p_bg);
  if (!background) {
    if (options.class_weights.empty()) {
      out.cls = uniform_int(rng, 1, alphabet.size());
    } else {
      std::discrete_distribution<int> dist(options.class_weights.begin(), options.class_weights.end());
      out.cls = dist(rng) + 1;
    }
  }
  const int glyph_px = uniform_int(rng, options.glyph_min_px, options.glyph_max_px);
  const int face = uniform_int(rng, 0, static_cast<int>(font_names().size()) - 1);
  const std::string text =
      pick_text(alphabet.at(out.cls == 0 ? 1 : out.cls), options.variant_prob, rng);
  const Eigen::MatrixXf ink = render_text(text, face, glyph_px);
  const int gh = static_cast<int>(ink.rows()), gw = static_cast<int>(ink.cols());

  // Working canvas: a background region large enough for the padded crop.
  const int side = static_cast<int>(std::ceil(std::max(gh, gw) * 3.0)) + 4;
  const int cw = std::min(side, src.width()), ch = std::min(side, src.height());
  // Prefer regions free of the figure's own labels.
  int oy = 0, ox = 0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    oy = uniform_int(rng, 0, src.height() - ch);
    ox = uniform_int(rng, 0, src.width() - cw);
    const bool clear = std::none_of(fig.label_boxes.begin(), fig.label_boxes.end(), [&](const LabeledBox& l) {
      const PixelRect r = pixel_rect(l.box, src.height(), src.width());
      return r.x0 < ox + cw && ox < r.x1 && r.y0 < oy + ch && oy < r.y1;
    });
    if (clear) break;
  }
  Image canvas = crop(src, oy, ox, oy + ch, ox + cw);

  const int top = (ch - gh) / 2 + uniform_int(rng, -2, 2);
  const int left = (cw - gw) / 2 + uniform_int(rng, -2, 2);
  BBox box;
  if (background) {
    const double W = cw, H = ch;
    box = BBox::from_corners((left - 1) / W, (top - 1) / H, (left + gw + 1) / W, (top + gh + 1) / H);
  } else {
    const bool backing = bernoulli(rng, 0.3);
    const Rgb color = backing ? Rgb{0, 0, 0}
                              : contrasting_ink(mean_color(canvas, {top, left, top + gh, left + gw}), rng);
    box = stamp_label(canvas, text, face, glyph_px, color, top, left, backing);
  }
  // Emulate localization error of an upstream detector.
  box.x += uniform(rng, -0.12, 0.12) * box.w;
  box.y += uniform(rng, -0.12, 0.12) * box.h;
  box.w *= uniform(rng, 0.85, 1.2);
  box.h *= uniform(rng, 0.85, 1.2);
  out.raster = crop_square_patch(canvas, box, options.padding, options.patch_size);
  return out;
}

// ---------------------------------------------------------------------------
// Augmentation

FigureRecord augment_figure(const FigureRecord& record, std::uint64_t seed,
                            const AugmentOptions& options) {
  if (!options.enabled) return record;
  Rng rng(mix_seed(seed, 0xA06));
  const int H = record.image.height(), W = record.image.width();
  // Output pixel (u, v) samples source ((u + 0.5) / s + ox - 0.5, ...).
  double s = 1.0, ox = 0.0, oy = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    const double cs = std::exp(uniform(rng, std::log(options.min_scale), std::log(options.max_scale)));
    const double span_x = W - W / cs, span_y = H - H / cs;
    const double cx = uniform(rng, std::min(0.0, span_x), std::max(0.0, span_x));
    const double cy = uniform(rng, std::min(0.0, span_y), std::max(0.0, span_y));
    const bool keeps_labels = std::all_of(record.label_boxes.begin(), record.label_boxes.end(), [&](const LabeledBox& l) {
      const double x0 = (l.box.left() * W - cx) * cs, x1 = (l.box.right() * W - cx) * cs;
      const double y0 = (l.box.top() * H - cy) * cs, y1 = (l.box.bottom() * H - cy) * cs;
      return x0 >= 0 && y0 >= 0 && x1 <= W && y1 <= H;
    });
    if (keeps_labels) {
      s = cs;
      ox = cx;
      oy = cy;
      break;
    }
  }
  const double contrast = 1.0 + uniform(rng, -options.contrast_jitter, options.contrast_jitter);
  const double brightness = uniform(rng, -options.brightness_jitter, options.brightness_jitter);

  FigureRecord out;
  out.image_id = record.image_id;
  out.image = Image(H, W);
  const Image& src = record.image;
  for (int v = 0; v < H; ++v) {
    const double fy = (v + 0.5) / s + oy - 0.5;
    for (int u = 0; u < W; ++u) {
      const double fx = (u + 0.5) / s + ox - 0.5;
      Rgb px{255, 255, 255};
      if (fx > -0.5 && fy > -0.5 && fx < W - 0.5 && fy < H - 0.5) {
        const double cx = std::clamp(fx, 0.0, W - 1.0), cy = std::clamp(fy, 0.0, H - 1.0);
        const int x0 = static_cast<int>(cx), y0 = static_cast<int>(cy);
        const int x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
        const double wx = cx - x0, wy = cy - y0;
        for (int c = 0; c < 3; ++c) {
          const double top = src.at(y0, x0, c) * (1 - wx) + src.at(y0, x1, c) * wx;
          const double bot = src.at(y1, x0, c) * (1 - wx) + src.at(y1, x1, c) * wx;
          px[c] = static_cast<std::uint8_t>(std::lround(top * (1 - wy) + bot * wy));
        }
      }
      for (int c = 0; c < 3; ++c)
        out.image.at(v, u, c) = static_cast<std::uint8_t>(
            std::clamp(std::lround((px[c] - 127.5) * contrast + 127.5 + brightness), 0L, 255L));
    }
  }
  auto map_box = [&](const BBox& b) {
    return BBox{(b.x * W - ox) * s / W, (b.y * H - oy) * s / H, b.w * s, b.h * s};
  };
  for (const auto& l : record.label_boxes) out.label_boxes.push_back({map_box(l.box), l.cls, l.confidence});
  for (const auto& sb : record.subfig_boxes) {
    const BBox b = map_box(sb.box).clipped();
    if (b.valid()) out.subfig_boxes.push_back({b, sb.cls});
  }
  return out;
}

}  // namespace figsep
