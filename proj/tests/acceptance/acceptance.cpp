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


// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "figsep/pipeline.hpp"
#include "oracles.hpp"

using namespace figsep;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << std::endl;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

// ---------------------------------------------------------------------------

void criterion_label_pr() {
  const auto t0 = Clock::now();
  const LabelPR pr = label_pr_from_counts(4777, 24, 4982);
  const double p = std::round(pr.precision * 1e4) / 1e4, r = std::round(pr.recall * 1e4) / 1e4;
  const double dt = seconds_since(t0);
  report(1, "label precision/recall from raw counts",
         p == 0.9950 && r == 0.9589 && dt < 1.0,
         "P " + fmt(p) + " (want 0.9950), R " + fmt(r) + " (want 0.9589), " + fmt(dt, 3) + " s");
}

void criterion_geometry() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const BBox a = testing::random_box(rng), b = testing::random_box(rng);
    worst = std::max(worst, std::abs(iou(a, b) - testing::raster_areas(a, b, 2000).iou()));
  }
  int mismatches = 0;
  std::uniform_int_distribution<int> count(1, 12);
  for (int k = 0; k < 200; ++k) {
    std::vector<BBox> boxes;
    const int n = count(rng);
    for (int m = 0; m < n; ++m) boxes.push_back(testing::random_box(rng, 0.01, 0.5));
    const int res = 64 + 16 * (k % 8);
    mismatches += rasterize_mask(boxes, res, res).popcount() != testing::union_popcount(boxes, res, res);
  }
  const double dt = seconds_since(t0);
  report(2, "IoU vs 2000x2000 raster and mask popcount", worst < 5e-3 && mismatches == 0 && dt < 60.0,
         "max |IoU error| " + fmt(worst, 6) + " (< 5e-3) on 1000 pairs, popcount mismatches " +
             std::to_string(mismatches) + "/200, " + fmt(dt, 1) + " s");
}

/// Gradient entries restricted to `channels` of every anchor block.
std::vector<double> select_channels(const std::vector<double>& g, const HeadOutputs<double>& like, int per_anchor,
                                    std::set<int> channels) {
  std::vector<double> out(g.size(), 0.0);
  std::size_t base = 0;
  for (const auto& m : like) {
    const Eigen::Index cols = m.data.cols();
    for (int ch = 0; ch < m.channels; ++ch)
      if (channels.count(ch % per_anchor))
        for (Eigen::Index c = 0; c < cols; ++c) {
          const std::size_t idx = base + static_cast<std::size_t>(ch * cols + c);
          out[idx] = g[idx];
        }
    base += static_cast<std::size_t>(m.data.size());
  }
  return out;
}

std::vector<double> flatten(const HeadOutputs<double>& o) {
  std::vector<double> v;
  for (const auto& m : o) v.insert(v.end(), m.data.data(), m.data.data() + m.data.size());
  return v;
}

HeadOutputs<double> unflatten(const std::vector<double>& v, HeadOutputs<double> like) {
  std::size_t k = 0;
  for (auto& m : like)
    for (Eigen::Index i = 0; i < m.data.size(); ++i) m.data.data()[i] = v[k++];
  return like;
}

void criterion_gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.5);
  auto randomize = [&](nn::FeatureMap<double>& m) {
    for (Eigen::Index k = 0; k < m.data.size(); ++k) m.data.data()[k] = n(rng);
  };

  // L1 and L2 on a two-scale label localizer head.
  DetectorConfig dc;
  dc.input_size = 32;
  dc.backbone = nn::BackboneConfig{3, {4, 6, 8}, 1, 6, {4, 8}};
  dc.anchors = AnchorSet{{{{0.05, 0.06}, {0.1, 0.08}}, {{0.2, 0.2}, {0.4, 0.3}}}};
  dc.lambda = 0.7;
  HeadOutputs<double> out;
  for (int g : {8, 4}) {
    auto m = nn::FeatureMap<double>::zeros(10, g, g);
    randomize(m);
    out.push_back(std::move(m));
  }
  const std::vector<LocalizationTarget> lt{
      {{0.31, 0.27, 0.06, 0.05}, 0}, {{0.72, 0.64, 0.33, 0.28}, 0}, {{0.12, 0.81, 0.09, 0.11}, 0}};
  HeadOutputs<double> grads;
  localization_loss<double>(out, lt, dc, &grads);
  const auto x = flatten(out), g = flatten(grads);
  const double l1 = testing::max_relative_error(
      [&](const std::vector<double>& v) { return localization_loss<double>(unflatten(v, out), lt, dc).regression; }, x,
      select_channels(g, out, 5, {0, 1, 2, 3}));
  const double l2 = testing::max_relative_error(
      [&](const std::vector<double>& v) {
        return dc.lambda * localization_loss<double>(unflatten(v, out), lt, dc).confidence;
      },
      x, select_channels(g, out, 5, {4}));

  // L3 on classifier logits.
  double l3 = 0.0;
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd z(10), gz;
    for (int k = 0; k < 10; ++k) z(k) = n(rng) * 2;
    cross_entropy<double>(z, t, &gz);
    l3 = std::max(l3, testing::max_relative_error(
                          [&](const std::vector<double>& v) {
                            return cross_entropy<double>(Eigen::Map<const Eigen::VectorXd>(v.data(), 10), t);
                          },
                          std::vector<double>(z.data(), z.data() + 10), std::vector<double>(gz.data(), gz.data() + 10)));
  }

  // L4 on the subfigure auxiliary head.
  SubfigureConfig sc;
  sc.input_size = 32;
  sc.backbone = nn::BackboneConfig{4, {4, 6, 8}, 1, 6, {4}};
  auto so = nn::FeatureMap<double>::zeros(5, 8, 8), sa = nn::FeatureMap<double>::zeros(5, 8, 8);
  randomize(so);
  randomize(sa);
  const std::vector<SubfigureTarget> st{{{{0.12, 0.1, 0.06, 0.05}, 1}, {0.33, 0.31, 0.4, 0.38}},
                                        {{{0.62, 0.58, 0.05, 0.05}, 2}, {0.77, 0.73, 0.3, 0.35}}};
  nn::FeatureMap<double> gso, gsa;
  subfigure_loss<double>(so, sa, st, sc, &gso, &gsa);
  const HeadOutputs<double> aux_like{sa};
  const double l4 = testing::max_relative_error(
      [&](const std::vector<double>& v) {
        return subfigure_loss<double>(so, unflatten(v, aux_like)[0], st, sc).center;
      },
      flatten(aux_like), select_channels(flatten(HeadOutputs<double>{gsa}), aux_like, 5, {0, 1}));
  const double dt = seconds_since(t0);
  const double worst = std::max({l1, l2, l3, l4});
  report(3, "analytic vs central-difference gradients", worst < 1e-4 && dt < 60.0,
         "max rel err L1 " + sci(l1) + ", L2 " + sci(l2) + ", L3 " + sci(l3) + ", L4 " + sci(l4) +
             " (< 1e-4), " + fmt(dt, 2) + " s");
}

void criterion_encode_decode() {
  std::mt19937_64 rng(4);
  const GridShape grid{13, 13};
  const AnchorPrior prior{0.1, 0.2}, sub_prior{0.4, 0.4};
  std::uniform_int_distribution<int> cell(0, 12);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const BBox b = testing::random_box(rng, 0.01, 0.9);
    const GridCoord c = center_cell(b, grid);
    const auto t = encode_anchor_box(b, c, grid, prior);
    const BBox r = decode_anchor_box(t[0], t[1], t[2], t[3], c, grid, prior);
    const GridCoord any{cell(rng), cell(rng), 0};
    const auto u = encode_subfigure_box(b, any, grid, sub_prior);
    const BBox s = decode_subfigure_box(u[0], u[1], u[2], u[3], any, grid, sub_prior);
    for (const BBox& o : {r, s})
      worst = std::max({worst, std::abs(o.x - b.x), std::abs(o.y - b.y), std::abs(o.w - b.w), std::abs(o.h - b.h)});
  }
  report(4, "box encode/decode round trip", worst < 1e-6,
         "max abs error " + sci(worst) + " (< 1e-6) on 10000 boxes, label and subfigure heads");
}

// ---------------------------------------------------------------------------

struct Benchmark {
  PipelineConfig config;
  std::vector<FigureRecord> train, test;
  std::optional<Separator> separator;
  std::optional<SubfigureDetector> latent_model;
};

void criterion_benchmark(Benchmark& b, const fs::path& workdir) {
  const auto t0 = Clock::now();
  b.train = generate_split(b.config, Split::kTrain);
  b.test = generate_split(b.config, Split::kTest);
  auto ld = train_label_detector_stage(b.train, b.config);
  const double t_ld = seconds_since(t0);
  auto lc = train_label_classifier_stage(b.train, b.config);
  const double t_lc = seconds_since(t0) - t_ld;
  auto sd = train_subfigure_stage(b.train, b.config);
  const double t_sd = seconds_since(t0) - t_ld - t_lc;
  b.latent_model = sd.model;
  b.separator.emplace(std::move(ld.model), std::move(lc.model), std::move(sd.model));
  const auto separations = b.separator->separate_all(b.test);
  const SeparationReport r = evaluate_separations(separations, b.test);
  const double dt = seconds_since(t0);
  write_text(workdir / "benchmark" / "report.txt", r.to_text());
  write_text(workdir / "benchmark" / "report.csv", r.to_csv());
  write_text(workdir / "benchmark" / "label_detector_loss.csv", ld.log.to_csv());
  write_text(workdir / "benchmark" / "label_classifier_loss.csv", lc.log.to_csv());
  write_text(workdir / "benchmark" / "subfigure_detector_loss.csv", sd.log.to_csv());
  const bool pass = r.ap50 >= 0.80 && r.labels.precision >= 0.95 && r.labels.recall >= 0.90 && dt <= 1800.0;
  report(5, "end-to-end synthetic benchmark (300 train / 100 test)", pass,
         "AP50 " + fmt(r.ap50) + " (>= 0.80), AP75 " + fmt(r.ap75) + ", AP50:95 " + fmt(r.ap50_95) + ", label P " +
             fmt(r.labels.precision) + " (>= 0.95) R " + fmt(r.labels.recall) + " (>= 0.90) [" +
             std::to_string(r.labels.true_positives) + " TP / " + std::to_string(r.labels.false_positives) +
             " FP / " + std::to_string(r.labels.false_negatives) + " FN], " + fmt(dt / 60.0, 1) +
             " min (<= 30; stages " + fmt(t_ld, 0) + "/" + fmt(t_lc, 0) + "/" + fmt(t_sd, 0) + " s)");

  // A clean 2x2 figure should come back as four crops named after its labels.
  SyntheticLayoutSpec spec{2, 2, 0.05, 4};
  spec.width = spec.height = 256;
  spec.image_id = "grid";
  const FigureRecord grid = generate_synthetic_figure(spec, 77);
  const Separation s = b.separator->separate(grid.image_id, grid.image);
  std::string names;
  for (const auto& d : s.result.subfigures) names += crop_name(grid.image_id, d.cls, b.config.alphabet()) + " ";
  std::cout << "INFO 2x2 figure crops: " << (names.empty() ? "(none)" : names) << std::endl;
}

void criterion_latent(Benchmark& b, const fs::path& workdir) {
  const auto t0 = Clock::now();
  PipelineConfig anchor = b.config;
  anchor.subfigure.latent_refinement = false;
  const auto a = train_subfigure_stage(b.train, anchor);
  const std::vector<NamedRun> runs{{"latent", subfigure_evals_with_gt_labels(*b.latent_model, b.test)},
                                   {"anchor-only", subfigure_evals_with_gt_labels(a.model, b.test)}};
  const AblationTable t = ablation_report(runs, b.config.alphabet());
  write_text(workdir / "ablate_latent" / "table.txt", t.to_text());
  write_text(workdir / "ablate_latent" / "table.csv", t.to_csv());
  const double gap = 100.0 * (t.row("latent").ap75 - t.row("anchor-only").ap75);
  report(6, "latent refinement vs anchor-only AP75", gap >= 5.0,
         "AP75 " + fmt(t.row("latent").ap75) + " vs " + fmt(t.row("anchor-only").ap75) + ", gap " + fmt(gap, 1) +
             " points (>= +5), AP50 " + fmt(t.row("latent").ap50) + " vs " + fmt(t.row("anchor-only").ap50) + ", " +
             fmt(seconds_since(t0), 0) + " s");
}

void criterion_decoupling(const PipelineConfig& config, const fs::path& workdir) {
  const auto t0 = Clock::now();
  const DecouplingAblation d = ablate_decoupling(config);
  write_text(workdir / "ablate_decoupling" / "table.txt", d.table.to_text());
  write_text(workdir / "ablate_decoupling" / "table.csv", d.table.to_csv());
  std::string per_class;
  for (int c : d.rare_classes)
    per_class += config.alphabet().glyph(c) + " " + fmt(d.table.per_class("decoupled", c), 3) + " vs " +
                 fmt(d.table.per_class("end-to-end", c), 3) + "; ";
  const double gap = 100.0 * d.rare_gap;
  report(7, "decoupled vs end-to-end rare-class AP50", gap >= 10.0,
         per_class + "mean gap " + fmt(gap, 1) + " points (>= +10), " + fmt(seconds_since(t0) / 60.0, 1) + " min");
}

// ---------------------------------------------------------------------------

void criterion_invariants(const Benchmark& b) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const SubfigureDetector& model = b.latent_model ? *b.latent_model : SubfigureDetector(b.config.subfigure, 1);
  CorpusSpec spec = b.config.corpus;
  spec.alphabet = b.config.alphabet();
  const auto figures = generate_corpus(spec, 100, 808, "inv_");

  int bijection = 0, association = 0, culling = 0, ap = 0;
  for (const auto& r : figures) {
    // One refined detection per label, carrying that label's class.
    const auto refined = model.refine_all(r.image, r.label_boxes);
    bool ok = refined.size() == r.label_boxes.size();
    std::set<int> classes;
    for (std::size_t k = 0; ok && k < refined.size(); ++k) {
      ok = refined[k].label.cls == r.label_boxes[k].cls;
      classes.insert(refined[k].label.cls);
    }
    const auto det = model.detect(r.image_id, r.image, r.label_boxes);
    std::set<int> det_classes;
    for (const auto& d : det.subfigures) det_classes.insert(d.cls);
    ok = ok && classes.size() == refined.size() && det_classes.size() == det.subfigures.size() &&
         std::includes(classes.begin(), classes.end(), det_classes.begin(), det_classes.end());
    bijection += ok;

    // Permuting the labels permutes the detections.
    std::vector<std::size_t> perm(r.label_boxes.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<LabeledBox> shuffled;
    for (auto p : perm) shuffled.push_back(r.label_boxes[p]);
    const auto moved = model.refine_all(r.image, shuffled);
    bool same = moved.size() == refined.size();
    for (std::size_t k = 0; same && k < moved.size(); ++k)
      same = moved[k].label == refined[perm[k]].label && moved[k].box == refined[perm[k]].box &&
             moved[k].confidence == refined[perm[k]].confidence;
    association += same;
  }

  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RawDetection> dets(40);
    for (auto& d : dets) {
      d.box = testing::random_box(rng, 0.02, 0.3);
      d.confidence = u(rng);
    }
    bool ok = true;
    std::size_t prev = dets.size() + 1;
    std::vector<RawDetection> prev_kept = dets;
    for (double eps = 0.0; eps <= 1.0; eps += 0.02) {
      const auto kept = filter_confidence(dets, eps);
      ok = ok && kept.size() <= prev;
      for (const auto& d : kept)
        ok = ok && d.confidence > eps &&
             std::any_of(prev_kept.begin(), prev_kept.end(), [&](const RawDetection& p) { return p.box == d.box; });
      prev = kept.size();
      prev_kept = kept;
      ok = ok && cull(dets, eps, 0.45).size() <= kept.size();
    }
    culling += ok;
  }

  for (int trial = 0; trial < 100; ++trial) {
    ImageEval e;
    e.image_id = "ap";
    for (int k = 0; k < 6; ++k) e.gts.push_back({testing::random_box(rng, 0.05, 0.3), 1 + k % 3});
    for (const auto& g : e.gts) {
      BBox p = g.box;
      p.x += 0.05 * (u(rng) - 0.5);
      if (u(rng) < 0.8) e.preds.push_back({p, u(rng), g.cls});
    }
    for (int k = 0; k < 4; ++k) e.preds.push_back({testing::random_box(rng, 0.05, 0.3), u(rng), 1 + k % 3});
    const std::vector<ImageEval> base{e};
    const double a0 = mean_average_precision(base, 0.5);
    bool ok = a0 >= 0.0 && a0 <= 1.0;
    // Monotone confidence transform leaves AP unchanged.
    ImageEval squashed = e;
    for (auto& p : squashed.preds) p.confidence = p.confidence * p.confidence;
    ok = ok && std::abs(mean_average_precision(std::vector<ImageEval>{squashed}, 0.5) - a0) < 1e-12;
    // Appending a lowest-confidence prediction never lowers AP.
    ImageEval appended = e;
    appended.preds.push_back({testing::random_box(rng, 0.05, 0.3), -1.0, 1});
    ok = ok && mean_average_precision(std::vector<ImageEval>{appended}, 0.5) >= a0 - 1e-12;
    // Dropping unmatched predictions never lowers AP.
    ImageEval cleaned = e;
    cleaned.preds.clear();
    for (const auto& p : e.preds) {
      const bool hit = std::any_of(e.gts.begin(), e.gts.end(),
                                   [&](const GroundTruth& g) { return g.cls == p.cls && iou(g.box, p.box) > 0.0; });
      if (hit) cleaned.preds.push_back(p);
    }
    ok = ok && mean_average_precision(std::vector<ImageEval>{cleaned}, 0.5) >= a0 - 1e-12;
    // Perfect predictions reach 1.
    ImageEval oracle = e;
    oracle.preds.clear();
    for (const auto& g : e.gts) oracle.preds.push_back({g.box, 0.5, g.cls});
    ok = ok && std::abs(mean_average_precision(std::vector<ImageEval>{oracle}, 0.5) - 1.0) < 1e-12;
    ap += ok;
  }
  report(8, "structural invariants (100 instances each)", bijection == 100 && association == 100 && culling == 100 && ap == 100,
         "label/detection bijection " + std::to_string(bijection) + "/100, permutation association " +
             std::to_string(association) + "/100, culling monotone in eps " + std::to_string(culling) +
             "/100, AP properties " + std::to_string(ap) + "/100");
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FIGSEP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion_reproducibility(const fs::path& workdir) {
  const auto t0 = Clock::now();
  PipelineConfig c = PipelineConfig::toy();
  c.n_train = 12;
  c.n_test = 6;
  c.localizer_schedule.steps = c.classifier_schedule.steps = c.subfigure_schedule.steps = 60;
  std::vector<std::string> compared;
  bool ok = true;
  std::vector<fs::path> roots;
  for (const char* run : {"run1", "run2"}) {
    const fs::path root = workdir / "repro" / run;
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream(root / "config.json") << nlohmann::json(c).dump(2);
    const std::string cfg = "--config " + (root / "config.json").string() + " --seed 42 --jobs 1";
    for (const char* cmd : {"generate", "train label-detector", "train label-classifier", "train subfigure-detector",
                            "separate", "evaluate"})
      ok = ok && run_cli(cfg + " " + cmd) == 0;
    roots.push_back(root);
  }
  const std::vector<std::string> files{"corpus/train/annotations.jsonl",
                                       "corpus/test/annotations.jsonl",
                                       "checkpoints/label-detector_loss.csv",
                                       "checkpoints/label-classifier_loss.csv",
                                       "checkpoints/subfigure-detector_loss.csv",
                                       "checkpoints/label-detector.ckpt",
                                       "checkpoints/label-classifier.ckpt",
                                       "checkpoints/subfigure-detector.ckpt",
                                       "outputs/separate/results.jsonl",
                                       "outputs/evaluate/report.txt",
                                       "outputs/evaluate/report.csv"};
  int identical = 0;
  for (const auto& f : files) {
    const bool exists = fs::exists(roots[0] / f) && fs::exists(roots[1] / f);
    identical += exists && slurp(roots[0] / f) == slurp(roots[1] / f);
  }
  ok = ok && identical == static_cast<int>(files.size());
  report(9, "byte-identical reruns of the full CLI pipeline", ok,
         std::to_string(identical) + "/" + std::to_string(files.size()) +
             " artifacts identical (annotations, loss curves, checkpoints, results, reports), " +
             fmt(seconds_since(t0), 0) + " s");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"figsep acceptance criteria"};
  std::string workdir = "acceptance_work";
  std::vector<int> only;
  app.add_option("--workdir", workdir, "scratch directory for corpora and reports");
  app.add_option("--only", only, "run a subset of criteria");
  CLI11_PARSE(app, argc, argv);
  const fs::path dir = fs::absolute(workdir);
  fs::create_directories(dir);
  auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

  Benchmark bench;
  bench.config = PipelineConfig::desk();
  try {
    if (wanted(1)) criterion_label_pr();
    if (wanted(2)) criterion_geometry();
    if (wanted(3)) criterion_gradients();
    if (wanted(4)) criterion_encode_decode();
    if (wanted(5) || wanted(6)) criterion_benchmark(bench, dir);
    if (wanted(6)) criterion_latent(bench, dir);
    if (wanted(7)) criterion_decoupling(bench.config, dir);
    if (wanted(8)) criterion_invariants(bench);
    if (wanted(9)) criterion_reproducibility(dir);
  } catch (const std::exception& e) {
    std::cout << "FAIL aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
