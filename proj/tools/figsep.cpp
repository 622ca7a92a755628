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


// figsep: corpus generation, training, separation and evaluation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "figsep/checkpoint.hpp"
#include "figsep/image.hpp"
#include "figsep/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace figsep;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kDivergence = 3 };

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs{1};
  bool force{false};
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

PipelineConfig load_config(const Globals& g) {
  PipelineConfig c = g.config_path.empty() ? PipelineConfig::desk() : load_pipeline_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError(CorpusError::Kind::kIo, "", "cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

bool non_empty_dir(const fs::path& p) { return fs::is_directory(p) && !fs::is_empty(p); }

/// Refuses to touch an existing non-empty directory unless forced; when forced
/// the directory is cleared.
void prepare_output_dir(const fs::path& dir, bool force) {
  if (non_empty_dir(dir)) {
    if (!force) throw UsageError(dir.string() + " is not empty; pass --force to overwrite");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

std::vector<FigureRecord> require_corpus(const fs::path& dir, const Alphabet& alphabet, const char* what) {
  auto corpus = load_corpus(dir, alphabet);
  if (corpus.empty())
    throw CorpusError(CorpusError::Kind::kMissingImage, "",
                      std::string(what) + " corpus " + dir.string() + " is missing or empty; run `figsep generate`");
  return corpus;
}

fs::path checkpoint_path(const PipelineConfig& c, const std::string& stage) {
  return c.paths.checkpoints / (stage + ".ckpt");
}

// ---------------------------------------------------------------------------

int cmd_generate(const Globals& g, std::optional<int> n_train, std::optional<int> n_test) {
  PipelineConfig c = load_config(g);
  if (n_train) c.n_train = *n_train;
  if (n_test) c.n_test = *n_test;
  for (auto [split, dir] : {std::pair{Split::kTrain, c.paths.train_corpus}, std::pair{Split::kTest, c.paths.test_corpus}}) {
    prepare_output_dir(dir, g.force);
    const auto records = generate_split(c, split);
    save_corpus(records, dir, c.alphabet());
    const auto reloaded = load_corpus(dir, c.alphabet());
    if (reloaded.size() != records.size())
      throw CorpusError(CorpusError::Kind::kInvalidRecord, "", "reload of " + dir.string() + " lost records");
    write_json(dir / "manifest.json",
               manifest("generate", c,
                        {{"split", split == Split::kTrain ? "train" : "test"},
                         {"records", records.size()},
                         {"corpus_seed", corpus_seed(c, split)}}));
    std::cout << "wrote " << records.size() << " figures to " << dir.string() << "\n";
  }
  return kOk;
}

int cmd_train(const Globals& g, const std::string& stage) {
  const PipelineConfig c = load_config(g);
  const fs::path ckpt = checkpoint_path(c, stage);
  if (fs::exists(ckpt) && !g.force) throw UsageError(ckpt.string() + " exists; pass --force to overwrite");
  fs::create_directories(c.paths.checkpoints);
  const auto corpus = require_corpus(c.paths.train_corpus, c.alphabet(), "train");
  TrainingLog log;
  if (stage == "label-detector") {
    auto run = train_label_detector_stage(corpus, c);
    run.model.save(ckpt);
    log = std::move(run.log);
  } else if (stage == "label-classifier") {
    auto run = train_label_classifier_stage(corpus, c);
    run.model.save(ckpt);
    log = std::move(run.log);
  } else {
    auto run = train_subfigure_stage(corpus, c);
    run.model.save(ckpt);
    log = std::move(run.log);
  }
  log.write_csv(c.paths.checkpoints / (stage + "_loss.csv"));
  const auto totals = log.series(log.columns().at(2));
  write_json(c.paths.checkpoints / (stage + "_manifest.json"),
             manifest("train " + stage, c, {{"checkpoint", ckpt.generic_string()}, {"final_loss", totals.back()}}));
  std::cout << stage << ": " << totals.size() << " steps, final " << log.columns().at(2) << " " << totals.back()
            << ", checkpoint " << ckpt.string() << "\n";
  return kOk;
}

Separator load_separator(const PipelineConfig& c) {
  return Separator(LabelDetector::load(checkpoint_path(c, "label-detector"), c.detector),
                   LabelClassifier::load(checkpoint_path(c, "label-classifier"), c.classifier),
                   SubfigureDetector::load(checkpoint_path(c, "subfigure-detector"), c.subfigure));
}

int cmd_separate(const Globals& g, std::string input, std::string out) {
  const PipelineConfig c = load_config(g);
  const fs::path in = input.empty() ? c.paths.test_corpus : fs::path(input);
  const fs::path dir = out.empty() ? c.paths.outputs / "separate" : fs::path(out);
  const Alphabet alphabet = c.alphabet();
  std::vector<FigureRecord> records;
  if (fs::is_directory(in)) {
    records = load_corpus(in, alphabet);
  } else {
    FigureRecord r;
    r.image_id = in.stem().string();
    r.image = read_png(in);
    records.push_back(std::move(r));
  }
  const Separator separator = load_separator(c);
  prepare_output_dir(dir, g.force);
  const auto separations = separator.separate_all(records, g.jobs);
  std::string lines;
  std::size_t crops = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    for (const auto& s : separations[k].result.subfigures) {
      write_png(crop_region(records[k].image, s.box), dir / "crops" / crop_name(records[k].image_id, s.cls, alphabet));
      ++crops;
    }
    lines += separation_to_json(separations[k], alphabet).dump() + "\n";
  }
  fs::create_directories(dir / "crops");
  write_text(dir / "results.jsonl", lines);
  write_json(dir / "manifest.json",
             manifest("separate", c, {{"input", in.generic_string()}, {"images", records.size()}, {"crops", crops}}));
  std::cout << "separated " << records.size() << " images into " << crops << " crops under " << dir.string() << "\n";
  return kOk;
}

std::vector<Separation> read_results(const fs::path& file, const Alphabet& alphabet) {
  std::ifstream in(file);
  if (!in) throw CorpusError(CorpusError::Kind::kMissingImage, "", "cannot read " + file.string());
  std::vector<Separation> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(separation_from_json(json::parse(line), alphabet));
    } catch (const json::parse_error& e) {
      throw CorpusError(CorpusError::Kind::kMalformedAnnotation, "", file.string() + ": " + e.what());
    }
  }
  return out;
}

int cmd_evaluate(const Globals& g, std::string results, std::string gt, std::string out) {
  const PipelineConfig c = load_config(g);
  const fs::path rdir = results.empty() ? c.paths.outputs / "separate" : fs::path(results);
  const fs::path gdir = gt.empty() ? c.paths.test_corpus : fs::path(gt);
  const fs::path dir = out.empty() ? c.paths.outputs / "evaluate" : fs::path(out);
  const auto separations = read_results(rdir / "results.jsonl", c.alphabet());
  const auto truth = load_corpus(gdir, c.alphabet());
  const SeparationReport report = evaluate_separations(separations, truth);
  prepare_output_dir(dir, g.force);
  write_text(dir / "report.csv", report.to_csv());
  write_text(dir / "report.txt", report.to_text());
  write_json(dir / "manifest.json",
             manifest("evaluate", c, {{"results", rdir.generic_string()}, {"ground_truth", gdir.generic_string()}}));
  std::cout << report.to_text();
  return kOk;
}

int cmd_ablate(const Globals& g, const std::string& which, std::string out) {
  const PipelineConfig c = load_config(g);
  const fs::path dir = out.empty() ? c.paths.outputs / ("ablate_" + which) : fs::path(out);
  prepare_output_dir(dir, g.force);
  AblationTable table;
  json extra;
  if (which == "decoupling") {
    const auto r = ablate_decoupling(c);
    table = r.table;
    extra = {{"rare_classes", r.rare_classes}, {"rare_class_ap50_gap", r.rare_gap}};
  } else {
    const auto train = require_corpus(c.paths.train_corpus, c.alphabet(), "train");
    const auto test = require_corpus(c.paths.test_corpus, c.alphabet(), "test");
    const auto r = ablate_latent(train, test, c);
    table = r.table;
    extra = {{"ap75_gap", r.ap75_gap}};
  }
  write_text(dir / "table.csv", table.to_csv());
  write_text(dir / "table.txt", table.to_text());
  write_json(dir / "manifest.json", manifest("ablate " + which, c, extra));
  std::cout << table.to_text();
  for (const auto& [k, v] : extra.items())
    if (v.is_number()) std::cout << k << " " << v.get<double>() << "\n";
  return kOk;
}

int cmd_config(const Globals& g, const std::string& preset) {
  PipelineConfig c = preset.empty() ? load_config(g) : preset == "toy" ? PipelineConfig::toy() : PipelineConfig::desk();
  if (g.seed) c.seed = *g.seed;
  std::cout << json(c).dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"figsep: compound figure separation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON pipeline config")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "override the config seed");
  app.add_option("--jobs", g.jobs, "inference threads")->check(CLI::PositiveNumber);
  app.add_flag("--force", g.force, "overwrite existing outputs");

  std::optional<int> n_train, n_test;
  auto* gen = app.add_subcommand("generate", "write synthetic train and test corpora");
  gen->add_option("--n-train", n_train)->check(CLI::NonNegativeNumber);
  gen->add_option("--n-test", n_test)->check(CLI::NonNegativeNumber);

  std::string stage;
  auto* train = app.add_subcommand("train", "train one stage");
  train->add_option("stage", stage)
      ->required()
      ->check(CLI::IsMember({"label-detector", "label-classifier", "subfigure-detector"}));

  std::string input, out, results, gt;
  auto* sep = app.add_subcommand("separate", "detect labels and subfigures, export crops");
  sep->add_option("--input", input, "PNG image or corpus directory (default: test corpus)");
  sep->add_option("--out", out, "output directory");

  auto* eval = app.add_subcommand("evaluate", "score separation results against ground truth");
  eval->add_option("--results", results, "directory holding results.jsonl");
  eval->add_option("--gt", gt, "ground-truth corpus directory");
  eval->add_option("--out", out, "report directory");

  std::string preset;
  auto* cfg = app.add_subcommand("config", "print the effective config as JSON");
  cfg->add_option("--preset", preset, "start from a preset instead of --config")
      ->check(CLI::IsMember({"desk", "toy"}));

  std::string which;
  auto* abl = app.add_subcommand("ablate", "paired comparison runs");
  abl->add_option("which", which)->required()->check(CLI::IsMember({"decoupling", "latent"}));
  abl->add_option("--out", out, "table directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_generate(g, n_train, n_test);
    if (*train) return cmd_train(g, stage);
    if (*sep) return cmd_separate(g, input, out);
    if (*eval) return cmd_evaluate(g, results, gt, out);
    if (*abl) return cmd_ablate(g, which, out);
    if (*cfg) return cmd_config(g, preset);
  } catch (const UsageError& e) {
    std::cerr << "figsep: " << e.what() << "\n";
    return kUsage;
  } catch (const TrainingDivergence& e) {
    std::cerr << "figsep: training diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "figsep: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
