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


#include "figsep/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

#include "figsep/random.hpp"

namespace figsep {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Stream : std::uint64_t {
  kTrainCorpus = 1,
  kTestCorpus = 2,
  kLocalizer = 3,
  kClassifier = 4,
  kSubfigure = 5,
  kRealPatches = 6,
  kSyntheticPatches = 7,
  kJoint = 8,
  kFixtureTrain = 9,
  kFixtureTest = 10,
};

TrainingSchedule seeded(TrainingSchedule s, std::uint64_t seed, Stream stream) {
  s.seed = mix_seed(seed, stream);
  return s;
}

TrainingSchedule schedule(long steps, int batch, double lr, long decay_interval) {
  TrainingSchedule s;
  s.steps = steps;
  s.batch_size = batch;
  s.learning_rate = lr;
  s.decay_interval = decay_interval;
  s.decay_factor = 0.2;
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

PipelinePaths PipelinePaths::resolved(const fs::path& base) const {
  auto fix = [&](const fs::path& p) { return p.is_absolute() ? p : base / p; };
  return {fix(train_corpus), fix(test_corpus), fix(checkpoints), fix(outputs)};
}

void PipelineConfig::validate() const {
  if (alphabet_size < 1 || alphabet_size > 26)
    throw std::invalid_argument("PipelineConfig: alphabet_size must lie in [1, 26]");
  if (n_train < 0 || n_test < 0) throw std::invalid_argument("PipelineConfig: corpus sizes must be >= 0");
  if (static_cast<int>(corpus.profile.weights.size()) != alphabet_size)
    throw std::invalid_argument("PipelineConfig: corpus profile must have one weight per class");
  if (classifier.num_classes != alphabet_size + 1)
    throw std::invalid_argument("PipelineConfig: classifier needs alphabet_size + 1 classes");
  if (detector.num_classes != 0)
    throw std::invalid_argument("PipelineConfig: the label localizer must be class-agnostic");
  if (real_copies < 1) throw std::invalid_argument("PipelineConfig: real_copies must be >= 1");
  for (int c : decoupling.rare_classes)
    if (c < 1 || c > alphabet_size) throw std::invalid_argument("PipelineConfig: rare class outside the alphabet");
  if (!(decoupling.rare_weight > 0.0)) throw std::invalid_argument("PipelineConfig: rare_weight must be > 0");
  for (const auto* s : {&localizer_schedule, &classifier_schedule, &subfigure_schedule})
    if (s->steps < 1 || s->batch_size < 1 || !(s->learning_rate > 0.0))
      throw std::invalid_argument("PipelineConfig: schedules need positive steps, batch size and learning rate");
  detector.validate();
  classifier.validate();
  subfigure.validate();
}

PipelineConfig PipelineConfig::desk() {
  PipelineConfig c;
  c.detector = DetectorConfig::desk();
  c.classifier = ClassifierConfig::desk(c.alphabet_size);
  c.subfigure = SubfigureConfig::desk();
  c.localizer_schedule = schedule(1500, 4, 2e-3, 1000);
  c.classifier_schedule = schedule(3000, 16, 2e-3, 2000);
  c.subfigure_schedule = schedule(1500, 4, 2e-3, 1000);
  return c;
}

PipelineConfig PipelineConfig::toy() {
  PipelineConfig c = desk();
  c.n_train = 6;
  c.n_test = 3;
  c.detector.input_size = 64;
  c.detector.backbone = nn::BackboneConfig{3, {4, 8, 8}, 1, 8, {4, 8}};
  c.detector.anchors = AnchorSet{{{{0.04, 0.05}}, {{0.1, 0.08}}}};
  c.classifier.widths = {4, 8};
  c.classifier.input_size = 16;
  c.subfigure.input_size = 32;
  c.subfigure.backbone = nn::BackboneConfig{4, {4, 8, 8}, 1, 8, {8}};
  c.localizer_schedule = schedule(20, 2, 3e-3, 1000);
  c.classifier_schedule = schedule(20, 4, 3e-3, 1000);
  c.subfigure_schedule = schedule(20, 2, 3e-3, 1000);
  return c;
}

void to_json(json& j, const TrainingSchedule& s) {
  j = json{{"steps", s.steps},
           {"batch_size", s.batch_size},
           {"learning_rate", s.learning_rate},
           {"decay_interval", s.decay_interval},
           {"decay_factor", s.decay_factor},
           {"grad_clip", s.grad_clip}};
}

void from_json(const json& j, TrainingSchedule& s) {
  s.steps = j.value("steps", s.steps);
  s.batch_size = j.value("batch_size", s.batch_size);
  s.learning_rate = j.value("learning_rate", s.learning_rate);
  s.decay_interval = j.value("decay_interval", s.decay_interval);
  s.decay_factor = j.value("decay_factor", s.decay_factor);
  s.grad_clip = j.value("grad_clip", s.grad_clip);
}

void to_json(json& j, const AugmentOptions& a) {
  j = json{{"enabled", a.enabled},
           {"min_scale", a.min_scale},
           {"max_scale", a.max_scale},
           {"contrast_jitter", a.contrast_jitter},
           {"brightness_jitter", a.brightness_jitter}};
}

void from_json(const json& j, AugmentOptions& a) {
  a.enabled = j.value("enabled", a.enabled);
  a.min_scale = j.value("min_scale", a.min_scale);
  a.max_scale = j.value("max_scale", a.max_scale);
  a.contrast_jitter = j.value("contrast_jitter", a.contrast_jitter);
  a.brightness_jitter = j.value("brightness_jitter", a.brightness_jitter);
}

namespace {

json corpus_json(const CorpusSpec& s) {
  return json{{"rows", {s.min_rows, s.max_rows}},
              {"cols", {s.min_cols, s.max_cols}},
              {"size", {s.min_size, s.max_size}},
              {"full_grid_prob", s.full_grid_prob},
              {"jitter", s.jitter},
              {"corner_prob", s.corner_prob},
              {"above_prob", s.above_prob},
              {"max_subfigures", s.max_subfigures},
              {"class_weights", s.profile.weights},
              {"variant_prob", s.variant_prob}};
}

void corpus_from(const json& j, CorpusSpec& s) {
  auto pair = [&](const char* key, int& lo, int& hi) {
    if (!j.contains(key)) return;
    const auto v = j[key].get<std::vector<int>>();
    if (v.size() != 2) throw std::invalid_argument(std::string("corpus.") + key + " must be [min, max]");
    lo = v[0];
    hi = v[1];
  };
  pair("rows", s.min_rows, s.max_rows);
  pair("cols", s.min_cols, s.max_cols);
  pair("size", s.min_size, s.max_size);
  s.full_grid_prob = j.value("full_grid_prob", s.full_grid_prob);
  s.jitter = j.value("jitter", s.jitter);
  s.corner_prob = j.value("corner_prob", s.corner_prob);
  s.above_prob = j.value("above_prob", s.above_prob);
  s.max_subfigures = j.value("max_subfigures", s.max_subfigures);
  if (j.contains("class_weights")) s.profile.weights = j["class_weights"].get<std::vector<double>>();
  s.variant_prob = j.value("variant_prob", s.variant_prob);
}

}  // namespace

void to_json(json& j, const PipelineConfig& c) {
  j = json{{"paths",
            {{"train_corpus", c.paths.train_corpus.generic_string()},
             {"test_corpus", c.paths.test_corpus.generic_string()},
             {"checkpoints", c.paths.checkpoints.generic_string()},
             {"outputs", c.paths.outputs.generic_string()}}},
           {"seed", c.seed},
           {"alphabet_size", c.alphabet_size},
           {"n_train", c.n_train},
           {"n_test", c.n_test},
           {"corpus", corpus_json(c.corpus)},
           {"label_detector", c.detector},
           {"label_classifier", c.classifier},
           {"subfigure_detector", c.subfigure},
           {"schedules",
            {{"label_detector", c.localizer_schedule},
             {"label_classifier", c.classifier_schedule},
             {"subfigure_detector", c.subfigure_schedule}}},
           {"augment", c.augment},
           {"classifier_data",
            {{"real_share", c.mix.real},
             {"synthetic_share", c.mix.synthetic},
             {"real_copies", c.real_copies},
             {"p_bg", c.patches.p_bg},
             {"variant_prob", c.patches.variant_prob}}},
           {"decoupling",
            {{"rare_classes", c.decoupling.rare_classes},
             {"rare_weight", c.decoupling.rare_weight},
             {"max_subfigures", c.decoupling.max_subfigures}}}};
}

void from_json(const json& j, PipelineConfig& c) {
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    c.paths.train_corpus = p.value("train_corpus", c.paths.train_corpus.generic_string());
    c.paths.test_corpus = p.value("test_corpus", c.paths.test_corpus.generic_string());
    c.paths.checkpoints = p.value("checkpoints", c.paths.checkpoints.generic_string());
    c.paths.outputs = p.value("outputs", c.paths.outputs.generic_string());
  }
  c.seed = j.value("seed", c.seed);
  const int old_alphabet = c.alphabet_size;
  c.alphabet_size = j.value("alphabet_size", c.alphabet_size);
  if (c.alphabet_size != old_alphabet) {
    c.corpus.profile = ImbalanceProfile::uniform(c.alphabet_size);
    c.classifier.num_classes = c.alphabet_size + 1;
  }
  c.n_train = j.value("n_train", c.n_train);
  c.n_test = j.value("n_test", c.n_test);
  if (j.contains("corpus")) corpus_from(j["corpus"], c.corpus);
  c.corpus.alphabet = c.alphabet();
  if (j.contains("label_detector")) c.detector = j["label_detector"].get<DetectorConfig>();
  if (j.contains("label_classifier")) c.classifier = j["label_classifier"].get<ClassifierConfig>();
  if (j.contains("subfigure_detector")) c.subfigure = j["subfigure_detector"].get<SubfigureConfig>();
  if (j.contains("schedules")) {
    const auto& s = j["schedules"];
    if (s.contains("label_detector")) from_json(s["label_detector"], c.localizer_schedule);
    if (s.contains("label_classifier")) from_json(s["label_classifier"], c.classifier_schedule);
    if (s.contains("subfigure_detector")) from_json(s["subfigure_detector"], c.subfigure_schedule);
  }
  if (j.contains("augment")) from_json(j["augment"], c.augment);
  if (j.contains("classifier_data")) {
    const auto& d = j["classifier_data"];
    c.mix.real = d.value("real_share", c.mix.real);
    c.mix.synthetic = d.value("synthetic_share", c.mix.synthetic);
    c.real_copies = d.value("real_copies", c.real_copies);
    c.patches.p_bg = d.value("p_bg", c.patches.p_bg);
    c.patches.variant_prob = d.value("variant_prob", c.patches.variant_prob);
  }
  if (j.contains("decoupling")) {
    const auto& d = j["decoupling"];
    c.decoupling.rare_classes = d.value("rare_classes", c.decoupling.rare_classes);
    c.decoupling.rare_weight = d.value("rare_weight", c.decoupling.rare_weight);
    c.decoupling.max_subfigures = d.value("max_subfigures", c.decoupling.max_subfigures);
  }
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path.string());
  PipelineConfig c = PipelineConfig::desk();
  try {
    from_json(json::parse(in), c);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  c.paths = c.paths.resolved(path.parent_path());
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Stages

std::uint64_t corpus_seed(const PipelineConfig& config, Split split) {
  return mix_seed(config.seed, split == Split::kTrain ? kTrainCorpus : kTestCorpus);
}

std::vector<FigureRecord> generate_split(const PipelineConfig& config, Split split) {
  CorpusSpec spec = config.corpus;
  spec.alphabet = config.alphabet();
  const int n = split == Split::kTrain ? config.n_train : config.n_test;
  return generate_corpus(spec, n, corpus_seed(config, split), split == Split::kTrain ? "train_" : "test_");
}

LocalizerTraining train_label_detector_stage(std::span<const FigureRecord> corpus, const PipelineConfig& config) {
  return train_localizer(corpus, config.detector, seeded(config.localizer_schedule, config.seed, kLocalizer),
                         config.augment);
}

ClassifierTraining train_label_classifier_stage(std::span<const FigureRecord> corpus,
                                                const PipelineConfig& config) {
  const auto real = real_label_patches(corpus, config.classifier, mix_seed(config.seed, kRealPatches),
                                       config.real_copies);
  const auto synthetic = synthetic_patch_stream(corpus, config.alphabet(), config.classifier,
                                                mix_seed(config.seed, kSyntheticPatches), config.patches);
  return train_classifier(real, synthetic, config.mix, config.classifier,
                          seeded(config.classifier_schedule, config.seed, kClassifier));
}

SubfigureTraining train_subfigure_stage(std::span<const FigureRecord> corpus, const PipelineConfig& config) {
  return train_subfigure_detector(corpus, config.subfigure,
                                  seeded(config.subfigure_schedule, config.seed, kSubfigure), config.augment);
}

// ---------------------------------------------------------------------------
// Inference

namespace {

json box_json(const BBox& b) { return json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

}  // namespace

json separation_to_json(const Separation& s, const Alphabet& alphabet) {
  json j = result_to_json(s.result, alphabet);
  j["labels"] = json::array();
  for (const auto& l : s.labels)
    j["labels"].push_back(json{{"class", alphabet.glyph(l.cls)}, {"conf", l.confidence}, {"box", box_json(l.box)}});
  return j;
}

Separation separation_from_json(const json& j, const Alphabet& alphabet) {
  Separation s;
  s.result = result_from_json(j, alphabet);
  try {
    if (j.contains("labels"))
      for (const auto& l : j["labels"]) {
        const auto glyph = l.at("class").get<std::string>();
        const auto cls = alphabet.find(glyph);
        if (!cls)
          throw CorpusError(CorpusError::Kind::kUnknownClass, s.result.image_id, "unknown class '" + glyph + "'");
        const auto& b = l.at("box");
        s.labels.push_back({BBox{b.at("x").get<double>(), b.at("y").get<double>(), b.at("w").get<double>(),
                                 b.at("h").get<double>()},
                            *cls, l.at("conf").get<double>()});
      }
  } catch (const json::exception& e) {
    throw CorpusError(CorpusError::Kind::kMalformedAnnotation, s.result.image_id, e.what());
  }
  return s;
}

Separator::Separator(LabelDetector detector, LabelClassifier classifier, SubfigureDetector subfigures)
    : detector_(std::move(detector)), classifier_(std::move(classifier)), subfigures_(std::move(subfigures)) {}

std::vector<LabeledBox> Separator::labels(const Image& image) const {
  return annotate_detections(image, detector_.detect(image), classifier_, detector_.config().conf_threshold);
}

Separation Separator::separate(const std::string& image_id, const Image& image) const {
  Separation s;
  s.labels = labels(image);
  s.result = subfigures_.detect(image_id, image, s.labels);
  return s;
}

std::vector<Separation> Separator::separate_all(std::span<const FigureRecord> records, int jobs) const {
  std::vector<Separation> out(records.size());
  const std::size_t n_threads = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
  auto work = [&](std::size_t first) {
    for (std::size_t k = first; k < records.size(); k += n_threads)
      out[k] = separate(records[k].image_id, records[k].image);
  };
  if (n_threads == 1) {
    work(0);
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work, t);
  for (auto& t : pool) t.join();
  return out;
}

Image crop_region(const Image& image, const BBox& box) {
  const PixelRect r = pixel_rect(box, image.height(), image.width());
  if (r.empty()) throw std::invalid_argument("crop_region: box covers no pixel");
  return crop(image, r.y0, r.x0, r.y1, r.x1);
}

std::string crop_name(const std::string& image_id, int cls, const Alphabet& alphabet) {
  return image_id + "_" + alphabet.glyph(cls) + ".png";
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

const FigureRecord& truth_for(const std::map<std::string, const FigureRecord*>& index, const std::string& id) {
  const auto it = index.find(id);
  if (it == index.end())
    throw CorpusError(CorpusError::Kind::kMalformedAnnotation, id, "no ground truth for this image");
  return *it->second;
}

std::map<std::string, const FigureRecord*> index_of(std::span<const FigureRecord> truth) {
  std::map<std::string, const FigureRecord*> m;
  for (const auto& r : truth) m[r.image_id] = &r;
  return m;
}

}  // namespace

std::vector<ImageEval> subfigure_evals(std::span<const Separation> separations,
                                       std::span<const FigureRecord> truth) {
  const auto index = index_of(truth);
  std::vector<ImageEval> out;
  for (const auto& s : separations) {
    const FigureRecord& r = truth_for(index, s.result.image_id);
    ImageEval e;
    e.image_id = r.image_id;
    for (const auto& g : r.subfig_boxes) e.gts.push_back({g.box, g.cls});
    for (const auto& d : s.result.subfigures) e.preds.push_back({d.box, d.confidence, d.cls});
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ImageEval> label_evals(std::span<const Separation> separations, std::span<const FigureRecord> truth) {
  const auto index = index_of(truth);
  std::vector<ImageEval> out;
  for (const auto& s : separations) {
    const FigureRecord& r = truth_for(index, s.result.image_id);
    ImageEval e;
    e.image_id = r.image_id;
    for (const auto& g : r.label_boxes) e.gts.push_back({g.box, g.cls});
    for (const auto& l : s.labels) e.preds.push_back({l.box, l.confidence, l.cls});
    out.push_back(std::move(e));
  }
  return out;
}

SeparationReport evaluate_separations(std::span<const Separation> separations,
                                      std::span<const FigureRecord> truth) {
  const auto subs = subfigure_evals(separations, truth);
  SeparationReport r;
  r.images = static_cast<int>(subs.size());
  bool any_gt = false;
  for (const auto& e : subs) any_gt = any_gt || !e.gts.empty();
  if (any_gt) {
    r.ap50 = mean_average_precision(subs, 0.5);
    r.ap75 = mean_average_precision(subs, 0.75);
    const auto thr = coco_thresholds();
    r.ap50_95 = ap_range(subs, thr);
  }
  r.labels = label_pr(label_evals(separations, truth), 0.5);
  return r;
}

// ---------------------------------------------------------------------------
// Ablations

namespace {

double mean_over(const AblationTable& t, const std::string& run, std::span<const int> classes) {
  double sum = 0.0;
  for (int c : classes) sum += t.per_class(run, c);
  return classes.empty() ? 0.0 : sum / static_cast<double>(classes.size());
}

}  // namespace

DecouplingAblation ablate_decoupling(const PipelineConfig& config) {
  CorpusSpec spec = config.corpus;
  spec.alphabet = config.alphabet();
  spec.max_subfigures = config.decoupling.max_subfigures;
  CorpusSpec test_spec = spec;
  test_spec.profile = ImbalanceProfile::uniform(config.alphabet_size);
  spec.profile = ImbalanceProfile::uniform(config.alphabet_size);
  for (int c : config.decoupling.rare_classes)
    spec.profile.weights[static_cast<std::size_t>(c - 1)] = config.decoupling.rare_weight;
  const auto train = generate_corpus(spec, config.n_train, mix_seed(config.seed, kFixtureTrain), "train_");
  const auto test = generate_corpus(test_spec, config.n_test, mix_seed(config.seed, kFixtureTest), "test_");

  const auto localizer = train_label_detector_stage(train, config);
  const auto classifier = train_label_classifier_stage(train, config);
  DetectorConfig joint_config = config.detector;
  joint_config.num_classes = config.alphabet_size;
  const auto joint =
      train_localizer(train, joint_config, seeded(config.localizer_schedule, config.seed, kJoint), config.augment);

  NamedRun decoupled{"decoupled", {}}, end_to_end{"end-to-end", {}};
  for (const auto& r : test) {
    ImageEval e;
    e.image_id = r.image_id;
    for (const auto& l : r.label_boxes) e.gts.push_back({l.box, l.cls});
    ImageEval a = e, b = e;
    for (const auto& l : annotate_detections(r.image, localizer.model.detect(r.image), classifier.model,
                                             config.detector.conf_threshold))
      a.preds.push_back({l.box, l.confidence, l.cls});
    for (const auto& l : joint_labeled_boxes(joint.model.detect(r.image)))
      b.preds.push_back({l.box, l.confidence, l.cls});
    decoupled.images.push_back(std::move(a));
    end_to_end.images.push_back(std::move(b));
  }
  DecouplingAblation out;
  const std::vector<NamedRun> runs{decoupled, end_to_end};
  out.table = ablation_report(runs, config.alphabet());
  out.rare_classes = config.decoupling.rare_classes;
  out.rare_gap = mean_over(out.table, "decoupled", out.rare_classes) -
                 mean_over(out.table, "end-to-end", out.rare_classes);
  return out;
}

std::vector<ImageEval> subfigure_evals_with_gt_labels(const SubfigureDetector& model,
                                                      std::span<const FigureRecord> test) {
  std::vector<ImageEval> out;
  for (const auto& r : test) {
    ImageEval e;
    e.image_id = r.image_id;
    for (const auto& g : r.subfig_boxes) e.gts.push_back({g.box, g.cls});
    for (const auto& d : model.detect(r.image_id, r.image, r.label_boxes).subfigures)
      e.preds.push_back({d.box, d.confidence, d.cls});
    out.push_back(std::move(e));
  }
  return out;
}

LatentAblation ablate_latent(std::span<const FigureRecord> train, std::span<const FigureRecord> test,
                             const PipelineConfig& config) {
  PipelineConfig latent = config, anchor = config;
  latent.subfigure.latent_refinement = true;
  anchor.subfigure.latent_refinement = false;
  const auto a = train_subfigure_stage(train, latent);
  const auto b = train_subfigure_stage(train, anchor);
  const std::vector<NamedRun> runs{{"latent", subfigure_evals_with_gt_labels(a.model, test)},
                                   {"anchor-only", subfigure_evals_with_gt_labels(b.model, test)}};
  LatentAblation out;
  out.table = ablation_report(runs, config.alphabet());
  out.ap75_gap = out.table.row("latent").ap75 - out.table.row("anchor-only").ap75;
  return out;
}

json manifest(const std::string& command, const PipelineConfig& config, const json& extra) {
  json j{{"tool", "figsep"}, {"command", command}, {"config", config}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

}  // namespace figsep
