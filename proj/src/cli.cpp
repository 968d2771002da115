// Copyright 2026 The lgseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lgseg/cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "lgseg/augment.hpp"
#include "lgseg/bench.hpp"
#include "lgseg/catalog.hpp"
#include "lgseg/config.hpp"
#include "lgseg/embed.hpp"
#include "lgseg/error.hpp"
#include "lgseg/experiment.hpp"
#include "lgseg/model.hpp"
#include "lgseg/parallel.hpp"
#include "lgseg/rng.hpp"
#include "lgseg/scene.hpp"
#include "lgseg/synthetic.hpp"
#include "lgseg/train.hpp"
#include "text_util.hpp"

namespace lgseg {
namespace {

namespace fs = std::filesystem;

// Options shared by every subcommand. Flags win over --set, which wins over
// config files (later files win over earlier ones).
struct Common {
  std::vector<std::string> configs;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
};

void add_common(CLI::App* app, Common& c, bool with_seed = true) {
  app->add_option("--config", c.configs, "key=value configuration file (repeatable)")->check(CLI::ExistingFile);
  app->add_option("--set", c.sets, "override one key: key=value (repeatable)");
  if (with_seed) c.seed_opt = app->add_option("--seed", c.seed, "random seed");
  c.workers_opt = app->add_option("--workers", c.workers, "parallel scene workers")->check(CLI::PositiveNumber);
}

KeyValues settings(const Common& c) {
  KeyValues kv;
  for (const auto& f : c.configs) kv.merge(KeyValues::read(f));
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    kv.set(std::string(text::trim(std::string_view(s).substr(0, eq))),
           std::string(text::trim(std::string_view(s).substr(eq + 1))));
  }
  if (c.seed_opt && c.seed_opt->count()) kv.set("seed", std::to_string(c.seed));
  if (c.workers_opt->count()) kv.set("workers", std::to_string(c.workers));
  return kv;
}

// Manifest lines under run.* describe the invocation; everything else is the
// resolved configuration, so a manifest can be fed back through --config.
bool is_run_key(std::string_view key) { return key.substr(0, 4) == "run."; }

void reject_unknown(const KeyValues& kv, std::vector<std::string_view> known) {
  std::vector<std::string> bad;
  for (const auto& [key, value] : kv.entries()) {
    if (!is_run_key(key) && std::find(known.begin(), known.end(), key) == known.end()) bad.push_back(key);
  }
  if (!bad.empty()) {
    std::string msg = "unknown configuration key";
    for (const auto& k : bad) msg += " '" + k + "'";
    throw UsageError(msg);
  }
}

std::vector<std::string_view> with_train_keys(std::vector<std::string_view> extra = {}) {
  const auto keys = train_keys();
  extra.insert(extra.end(), keys.begin(), keys.end());
  return extra;
}

TrainConfig train_config(const KeyValues& kv) {
  reject_unknown(kv, with_train_keys());
  TrainConfig cfg;
  apply(kv, cfg);
  if (!kv.contains("milestones")) cfg.milestones = default_milestones(cfg.epochs);
  cfg.validate();
  return cfg;
}

class Manifest {
 public:
  Manifest(std::string_view command, std::span<const std::string> args) {
    kv_.set("run.command", std::string(command));
    kv_.set("run.version", std::string(kVersion));
    kv_.set("run.eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                             std::to_string(EIGEN_MINOR_VERSION));
    std::string joined;
    for (const auto& a : args) joined += (joined.empty() ? "" : " ") + a;
    kv_.set("run.args", joined);
  }

  void input(std::string_view name, const std::vector<fs::path>& paths) {
    std::string joined;
    for (const auto& p : paths) joined += (joined.empty() ? "" : ",") + p.string();
    kv_.set("run.input." + std::string(name), joined);
  }
  void config(const KeyValues& kv) {
    for (const auto& [k, v] : kv.entries()) kv_.set(k, v);
  }
  void set(std::string key, std::string value) { kv_.set(std::move(key), std::move(value)); }

  void write(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary);
    out << kv_.format();
    if (!out) throw IoError("cannot write " + path.string());
  }

 private:
  KeyValues kv_;
};

void write_text(const fs::path& path, std::string_view content) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(content.data()), content.size()));
}

fs::path next_to(const fs::path& file) { return fs::path(file.string() + ".manifest"); }

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

fs::path existing_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw IoError("no such file: " + path);
  return path;
}

// Files are taken as given; directories contribute their files with the
// given extension in name order.
std::vector<fs::path> scene_paths(const std::vector<std::string>& inputs, std::string_view extension = ".sc3d") {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == extension) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(existing_file(in));
    }
  }
  if (out.empty()) throw UsageError("no " + std::string(extension) + " files given");
  return out;
}

std::vector<Scene> read_scenes(const std::vector<fs::path>& paths, std::size_t workers) {
  std::vector<Scene> scenes(paths.size());
  parallel_for(paths.size(), workers, [&](std::size_t i) { scenes[i] = read_scene(paths[i]); });
  return scenes;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// ---- gen

struct GenOptions {
  Common common;
  std::string out;
  std::size_t scenes = 1;
  std::string split = "train";
};

int cmd_gen(const GenOptions& o, std::span<const std::string> args, std::ostream& out) {
  const KeyValues kv = settings(o.common);
  std::vector<std::string_view> known{"seed", "workers"};
  for (auto k : synthetic_keys()) known.push_back(k);
  reject_unknown(kv, known);
  SyntheticSpec spec;
  apply(kv, spec);
  spec.validate();
  const auto seed = kv.integer("seed", 0);
  const auto workers = kv.integer("workers", 1);

  const LabelCatalog names = synthetic_catalog(spec.n_categories);
  std::vector<Scene> scenes(o.scenes);
  parallel_for(o.scenes, workers, [&](std::size_t i) {
    scenes[i] = generate_synthetic_scene(spec, names, mix_seed(seed, "corpus/" + o.split + "/" + std::to_string(i)));
  });
  const fs::path dir = o.out;
  fs::create_directories(dir);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "scene_%04zu.sc3d", i);
    write_scene(dir / name, scenes[i]);
    out << name << '\t' << scenes[i].points.size() << '\t' << instance_count(scenes[i]) << '\n';
  }
  write_catalog(dir / "catalog.tsv", with_counts(names, scene_stats(scenes, names.size())));
  Manifest m("gen", args);
  m.config(describe(spec));
  m.set("seed", std::to_string(seed));
  m.set("run.scenes", std::to_string(o.scenes));
  m.set("run.split", o.split);
  m.write(dir / "manifest.txt");
  return 0;
}

// ---- stats

struct StatsOptions {
  Common common;
  std::vector<std::string> scenes;
  std::string catalog;
  std::string out;
};

int cmd_stats(const StatsOptions& o, std::span<const std::string> args, std::ostream& out) {
  const KeyValues kv = settings(o.common);
  reject_unknown(kv, {"seed", "workers"});
  const auto paths = scene_paths(o.scenes);
  const LabelCatalog catalog = read_catalog(existing_file(o.catalog));
  const auto scenes = read_scenes(paths, kv.integer("workers", 1));
  const LabelCatalog counted = with_counts(catalog, scene_stats(scenes, catalog.size()));

  auto records = counted.records();
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.point_count > b.point_count; });
  out << "rank\tid\tname\tinstances\tpoints\tsplit\n";
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    out << r + 1 << '\t' << rec.id << '\t' << rec.name << '\t' << rec.instance_count << '\t' << rec.point_count
        << '\t' << to_string(counted.split(rec.id)) << '\n';
  }
  if (!o.out.empty()) {
    ensure_parent(o.out);
    write_catalog(o.out, counted);
    Manifest m("stats", args);
    m.input("scenes", paths);
    m.write(next_to(o.out));
  }
  return 0;
}

// ---- augment

struct AugmentOptions {
  Common common;
  std::string scene;
  std::vector<std::string> bank;
  std::string catalog;
  std::string out;
};

int cmd_augment(const AugmentOptions& o, std::span<const std::string> args, std::ostream& out) {
  const KeyValues kv = settings(o.common);
  const TrainConfig cfg = train_config(kv);
  const fs::path scene_path = existing_file(o.scene);
  const auto bank_paths = scene_paths(o.bank);
  const LabelCatalog catalog = read_catalog(existing_file(o.catalog));

  const Scene scene = read_scene(scene_path);
  const auto bank_scenes = read_scenes(bank_paths, cfg.workers);
  const InstanceBank bank = extract_instances(bank_scenes, catalog.ids_in(Split::tail));
  Rng rng = Rng::substream(cfg.seed, "augment");
  AugmentLog log;
  Scene result = augment_scene(scene, bank, catalog, cfg.augment_cfg, rng, &log);
  if (cfg.augment_cfg.jitter_sigma > 0.0) result = color_jitter(result, cfg.augment_cfg.jitter_sigma, rng);
  ensure_parent(o.out);
  write_scene(o.out, result);
  out << "inserted " << log.insertions.size() << " instances, " << result.points.size() - scene.points.size()
      << " points, " << log.attempts << " attempts\n";
  Manifest m("augment", args);
  m.input("scene", {scene_path});
  m.input("bank", bank_paths);
  m.input("catalog", {o.catalog});
  m.config(describe(cfg));
  m.write(next_to(o.out));
  return 0;
}

// ---- pretrain / finetune

struct TrainOptions {
  Common common;
  std::vector<std::string> scenes;
  std::string catalog;
  std::string embeddings;
  std::size_t anchor_dim = 0;
  std::string init;
  std::string out;
};

void print_log(const TrainLog& log, std::ostream& out) {
  for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) out << "epoch " << e << "\tloss " << fixed6(log.epoch_loss[e]) << '\n';
  out << "steps " << log.steps << '\n';
}

int cmd_pretrain(const TrainOptions& o, std::span<const std::string> args, std::ostream& out) {
  const KeyValues kv = settings(o.common);
  const TrainConfig cfg = train_config(kv);
  if (o.embeddings.empty() == (o.anchor_dim == 0)) {
    throw UsageError("pretrain needs exactly one of --embeddings and --anchor-dim");
  }
  const auto paths = scene_paths(o.scenes);
  const LabelCatalog catalog = read_catalog(existing_file(o.catalog));
  const EmbeddingTable table =
      o.embeddings.empty() ? synthetic_anchors(catalog.size(), o.anchor_dim, mix_seed(cfg.seed, "anchors"), catalog.names())
                           : load_table(existing_file(o.embeddings), catalog);
  const auto scenes = read_scenes(paths, cfg.workers);
  TrainLog log;
  const EncoderParams params = pretrain(scenes, catalog, table, cfg, &log);
  ensure_parent(o.out);
  write_checkpoint(o.out, Checkpoint{params, std::nullopt});
  print_log(log, out);
  Manifest m("pretrain", args);
  m.input("scenes", paths);
  m.input("catalog", {o.catalog});
  if (!o.embeddings.empty()) m.input("embeddings", {o.embeddings});
  m.set("run.anchor_dim", std::to_string(o.anchor_dim));
  m.config(describe(cfg));
  m.write(next_to(o.out));
  return 0;
}

int cmd_finetune(const TrainOptions& o, std::span<const std::string> args, std::ostream& out) {
  const KeyValues kv = settings(o.common);
  const TrainConfig cfg = train_config(kv);
  const auto paths = scene_paths(o.scenes);
  const LabelCatalog catalog = read_catalog(existing_file(o.catalog));
  const EncoderParams init = o.init.empty() ? initial_encoder(cfg) : read_checkpoint(existing_file(o.init)).encoder;
  const auto scenes = read_scenes(paths, cfg.workers);
  TrainLog log;
  const Model model = finetune(init, scenes, catalog, {}, cfg, &log);
  ensure_parent(o.out);
  write_checkpoint(o.out, Checkpoint{model.encoder, model.head});
  print_log(log, out);
  Manifest m("finetune", args);
  m.input("scenes", paths);
  m.input("catalog", {o.catalog});
  if (!o.init.empty()) m.input("init", {o.init});
  m.config(describe(cfg));
  m.write(next_to(o.out));
  return 0;
}

// ---- predict

struct PredictOptions {
  Common common;
  std::string checkpoint;
  std::vector<std::string> scenes;
  std::string catalog;
  std::string embeddings;
  std::string out;
};

int cmd_predict(const PredictOptions& o, std::span<const std::string> args, std::ostream& out) {
  const KeyValues kv = settings(o.common);
  const TrainConfig cfg = train_config(kv);
  const Checkpoint ckpt = read_checkpoint(existing_file(o.checkpoint));
  const auto paths = scene_paths(o.scenes);
  std::optional<EmbeddingTable> table;
  if (!ckpt.head) {
    if (o.embeddings.empty() || o.catalog.empty()) {
      throw UsageError("checkpoint has no classifier head; pass --embeddings and --catalog for nearest-anchor labels");
    }
    table = load_table(existing_file(o.embeddings), read_catalog(existing_file(o.catalog)));
  }
  const fs::path dir = o.out;
  fs::create_directories(dir);
  std::vector<std::size_t> sizes(paths.size());
  parallel_for(paths.size(), cfg.workers, [&](std::size_t i) {
    const Scene scene = read_scene(paths[i]);
    const auto labels = ckpt.head ? predict(Model{ckpt.encoder, *ckpt.head}, scene, cfg)
                                  : nearest_anchor_classify(ckpt.encoder, *table, scene, cfg);
    write_predictions(dir / paths[i].filename().replace_extension(".sprd"), labels);
    sizes[i] = labels.size();
  });
  for (std::size_t i = 0; i < paths.size(); ++i) out << paths[i].stem().string() << ".sprd\t" << sizes[i] << '\n';
  Manifest m("predict", args);
  m.input("checkpoint", {o.checkpoint});
  m.input("scenes", paths);
  m.config(describe(cfg));
  m.write(dir / "manifest.txt");
  return 0;
}

// ---- eval

struct EvalOptions {
  Common common;
  std::vector<std::string> gt;
  std::vector<std::string> pred;
  std::string catalog;
  std::string out;
};

std::vector<CategoryId> semantic_labels(const Scene& scene) {
  std::vector<CategoryId> out(scene.points.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scene.points[i].semantic;
  return out;
}

// Catalog inferred from the ground truth when none is given: ids up to the
// largest label seen, splits from ground-truth point counts.
LabelCatalog inferred_catalog(std::span<const Scene> gts, std::span<const std::vector<CategoryId>> preds) {
  std::size_t n = 0;
  auto see = [&n](CategoryId c) {
    if (c != kUnlabeled) n = std::max<std::size_t>(n, std::size_t{c} + 1);
  };
  for (const auto& s : gts) for (const auto& p : s.points) see(p.semantic);
  for (const auto& p : preds) for (auto c : p) see(c);
  std::vector<CategoryRecord> records(n);
  for (std::size_t i = 0; i < n; ++i) {
    records[i].id = static_cast<CategoryId>(i);
    records[i].name = "category " + std::to_string(i);
  }
  return with_counts(LabelCatalog(std::move(records)), scene_stats(gts, n));
}

int cmd_eval(const EvalOptions& o, std::span<const std::string> args, std::ostream& out) {
  const KeyValues kv = settings(o.common);
  reject_unknown(kv, {"seed", "workers"});
  const auto gt_paths = scene_paths(o.gt);
  const auto pred_paths = scene_paths(o.pred, ".sprd");
  if (gt_paths.size() != pred_paths.size()) throw UsageError("--gt and --pred need the same number of files");
  std::optional<LabelCatalog> given;
  if (!o.catalog.empty()) given = read_catalog(existing_file(o.catalog));

  const auto workers = kv.integer("workers", 1);
  const auto gts = read_scenes(gt_paths, workers);
  std::vector<std::vector<CategoryId>> preds(pred_paths.size());
  parallel_for(pred_paths.size(), workers, [&](std::size_t i) { preds[i] = read_predictions(pred_paths[i]); });
  const LabelCatalog catalog = given ? *given : inferred_catalog(gts, preds);

  ConfusionMatrix cm(catalog.size());
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (preds[i].size() != gts[i].points.size()) {
      throw DimensionError(pred_paths[i].string() + " has " + std::to_string(preds[i].size()) +
                           " labels for a scene of " + std::to_string(gts[i].points.size()) + " points");
    }
    accumulate(cm, semantic_labels(gts[i]), preds[i]);
  }
  const EvalReport report = metrics(cm, catalog.splits());
  const std::string text = format_report(report, catalog);
  out << text;
  if (!o.out.empty()) {
    const fs::path dir = o.out;
    fs::create_directories(dir);
    write_text(dir / "report.txt", text);
    write_text(dir / "report.json", report_json(report, catalog));
    Manifest m("eval", args);
    m.input("gt", gt_paths);
    m.input("pred", pred_paths);
    if (given) m.input("catalog", {o.catalog});
    m.write(dir / "manifest.txt");
  }
  return 0;
}

// ---- eval-inst

struct EvalInstOptions {
  Common common;
  std::string gt;
  std::string pred;
  std::string out;
};

// One instance per line: category id, confidence, point indices separated
// by spaces. Blank lines and '#' comments are skipped.
std::vector<InstancePrediction> parse_instances(std::string_view content, std::size_t n_points) {
  std::vector<InstancePrediction> out;
  for (auto line : text::lines(content)) {
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() != 3) throw FormatError("instance line needs 3 tab-separated fields: '" + std::string(line) + "'");
    InstancePrediction p;
    const auto cat = text::parse_u64(fields[0], "category id");
    if (cat >= kUnlabeled) throw FormatError("category id out of range");
    p.category = static_cast<CategoryId>(cat);
    p.confidence = text::parse_double(fields[1], "confidence");
    for (auto tok : text::split(fields[2], ' ')) {
      if (tok.empty()) continue;
      const auto idx = text::parse_u64(tok, "point index");
      if (idx >= n_points) throw FormatError("point index " + std::to_string(idx) + " beyond scene size");
      p.points.push_back(static_cast<std::uint32_t>(idx));
    }
    std::sort(p.points.begin(), p.points.end());
    p.points.erase(std::unique(p.points.begin(), p.points.end()), p.points.end());
    out.push_back(std::move(p));
  }
  return out;
}

int cmd_eval_inst(const EvalInstOptions& o, std::span<const std::string> args, std::ostream& out) {
  const KeyValues kv = settings(o.common);
  reject_unknown(kv, {"seed", "workers"});
  const fs::path gt_path = existing_file(o.gt);
  const fs::path pred_path = existing_file(o.pred);
  const Scene scene = read_scene(gt_path);
  const auto bytes = read_file(pred_path);
  const auto preds = parse_instances(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                                     scene.points.size());
  const auto gts = ground_truth_instances(scene);
  std::size_t n = 0;
  for (const auto& g : gts) n = std::max<std::size_t>(n, std::size_t{g.category} + 1);
  for (const auto& p : preds) n = std::max<std::size_t>(n, std::size_t{p.category} + 1);

  const MapSummary summary = map_range(preds, gts, n);
  const ApResult ap50 = ap_at_iou(preds, gts, n, 0.5);
  std::ostringstream text;
  text << "map25\t" << fixed6(summary.map25) << '\n'
       << "map50\t" << fixed6(summary.map50) << '\n'
       << "map50_95\t" << fixed6(summary.map50_95) << '\n';
  for (std::size_t c = 0; c < n; ++c) {
    text << "ap50\t" << c << '\t' << (ap50.per_category[c] ? fixed6(*ap50.per_category[c]) : "absent") << '\n';
  }
  out << text.str();
  if (!o.out.empty()) {
    const fs::path dir = o.out;
    fs::create_directories(dir);
    write_text(dir / "instances.txt", text.str());
    Manifest m("eval-inst", args);
    m.input("gt", {gt_path});
    m.input("pred", {pred_path});
    m.write(dir / "manifest.txt");
  }
  return 0;
}

// ---- annotate

struct AnnotateOptions {
  Common common;
  std::vector<std::string> scenes;
  double fraction = 0.0;
  std::string out;
};

int cmd_annotate(const AnnotateOptions& o, std::span<const std::string> args, std::ostream& out) {
  const KeyValues kv = settings(o.common);
  reject_unknown(kv, {"seed", "workers"});
  if (!(o.fraction > 0.0 && o.fraction <= 1.0)) throw UsageError("--fraction must be in (0, 1]");
  const auto paths = scene_paths(o.scenes);
  const auto seed = kv.integer("seed", 0);
  const fs::path dir = o.out;
  fs::create_directories(dir);
  std::vector<std::pair<std::size_t, std::size_t>> counts(paths.size());
  parallel_for(paths.size(), kv.integer("workers", 1), [&](std::size_t i) {
    const Scene scene = read_scene(paths[i]);
    Rng rng = Rng::substream(seed, "annotate/scene=" + std::to_string(i));
    const auto mask = sample_limited_annotations(scene, o.fraction, rng);
    write_scene(dir / paths[i].filename(), apply_mask(scene, mask));
    std::size_t labeled = 0;
    for (const auto& p : scene.points) labeled += p.semantic != kUnlabeled;
    counts[i] = {static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true)), labeled};
  });
  for (std::size_t i = 0; i < paths.size(); ++i) {
    out << paths[i].filename().string() << '\t' << counts[i].first << '\t' << counts[i].second << '\n';
  }
  Manifest m("annotate", args);
  m.input("scenes", paths);
  m.set("seed", std::to_string(seed));
  m.set("run.fraction", format_double(o.fraction));
  m.write(dir / "manifest.txt");
  return 0;
}

// ---- pca / embed-import

struct PcaOptions {
  Common common;
  std::string embeddings;
  std::size_t dim = 0;
  std::string out;
};

int cmd_pca(const PcaOptions& o, std::span<const std::string> args, std::ostream& out) {
  const KeyValues kv = settings(o.common);
  reject_unknown(kv, {"seed", "workers"});
  const RawEmbeddings raw = read_embeddings(existing_file(o.embeddings));
  const PcaModel model = fit_pca(raw.vectors, o.dim);
  RawEmbeddings projected{raw.names, project_rows(model, raw.vectors)};
  projected.vectors = projected.vectors.cast<float>().cast<double>();
  ensure_parent(o.out);
  write_embeddings(o.out, projected);
  out << "retained variance " << fixed6(model.retained_variance_ratio()) << '\n';
  Manifest m("pca", args);
  m.input("embeddings", {o.embeddings});
  m.set("run.dim", std::to_string(o.dim));
  m.write(next_to(o.out));
  return 0;
}

struct ImportOptions {
  Common common;
  std::string text;
  std::string catalog;
  std::size_t synthetic_dim = 0;
  std::string out;
};

// One row per line: name, a tab, then the values separated by spaces, tabs
// or commas.
RawEmbeddings parse_text_embeddings(std::string_view content) {
  RawEmbeddings raw;
  std::vector<std::vector<double>> rows;
  for (auto line : text::lines(content)) {
    if (text::trim(line).empty() || text::trim(line).front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw FormatError("embedding line has no tab after the name");
    std::vector<double> row;
    std::string values(line.substr(tab + 1));
    std::replace(values.begin(), values.end(), ',', ' ');
    std::replace(values.begin(), values.end(), '\t', ' ');
    for (auto tok : text::split(values, ' ')) {
      if (!tok.empty()) row.push_back(static_cast<float>(text::parse_double(tok, "embedding value")));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("embedding rows differ in width");
    }
    if (row.empty()) throw FormatError("embedding row without values");
    raw.names.emplace_back(text::trim(line.substr(0, tab)));
    rows.push_back(std::move(row));
  }
  const std::size_t d = rows.empty() ? 0 : rows.front().size();
  raw.vectors.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < d; ++c) raw.vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return raw;
}

int cmd_embed_import(const ImportOptions& o, std::span<const std::string> args, std::ostream& out) {
  const KeyValues kv = settings(o.common);
  reject_unknown(kv, {"seed", "workers"});
  if (o.text.empty() == (o.synthetic_dim == 0)) throw UsageError("embed-import needs exactly one of --text and --synthetic");
  RawEmbeddings raw;
  Manifest m("embed-import", args);
  if (!o.text.empty()) {
    const auto bytes = read_file(existing_file(o.text));
    raw = parse_text_embeddings(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    m.input("text", {o.text});
  } else {
    if (o.catalog.empty()) throw UsageError("--synthetic needs --catalog");
    const LabelCatalog catalog = read_catalog(existing_file(o.catalog));
    const auto seed = kv.integer("seed", 0);
    raw = to_raw(synthetic_anchors(catalog.size(), o.synthetic_dim, mix_seed(seed, "anchors"), catalog.names()));
    m.input("catalog", {o.catalog});
    m.set("seed", std::to_string(seed));
  }
  ensure_parent(o.out);
  write_embeddings(o.out, raw);
  out << raw.names.size() << " rows, dim " << raw.vectors.cols() << '\n';
  m.write(next_to(o.out));
  return 0;
}

// ---- experiment

struct ExperimentOptions {
  Common common;
  std::string out;
};

int cmd_experiment(const ExperimentOptions& o, std::span<const std::string> args, std::ostream& out,
                   std::ostream& err) {
  KeyValues kv = settings(o.common);
  std::vector<std::pair<std::string, std::string>> run_keys;
  for (const auto& [k, v] : kv.entries()) {
    if (is_run_key(k)) run_keys.emplace_back(k, v);
  }
  KeyValues config;
  for (const auto& [k, v] : kv.entries()) {
    if (!is_run_key(k)) config.set(k, v);
  }
  const ExperimentConfig cfg = experiment_config(config);
  const ExperimentResult result = run_experiment(cfg, &err);
  const std::string table = format_table(result);
  out << table;
  if (!o.out.empty()) {
    const fs::path dir = o.out;
    fs::create_directories(dir);
    write_text(dir / "table.txt", table);
    write_text(dir / "results.json", experiment_json(result));
    Manifest m("experiment", args);
    m.config(config);
    m.write(dir / "manifest.txt");
  }
  return 0;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Point cloud semantic segmentation with text-anchored pretraining", "lgseg"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic long-tail corpus");
  add_common(gen_cmd, gen.common);
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_option("--scenes", gen.scenes, "number of scenes")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--split", gen.split, "name used to derive per-scene seeds (train, val, ...)");

  StatsOptions stats;
  auto* stats_cmd = app.add_subcommand("stats", "per-category instance and point counts");
  add_common(stats_cmd, stats.common);
  stats_cmd->add_option("--scenes", stats.scenes, "scene files or directories")->required();
  stats_cmd->add_option("--catalog", stats.catalog, "catalog file")->required();
  stats_cmd->add_option("--out", stats.out, "write the recounted catalog here");

  AugmentOptions aug;
  auto* aug_cmd = app.add_subcommand("augment", "insert tail-category instances into a scene");
  add_common(aug_cmd, aug.common);
  aug_cmd->add_option("--scene", aug.scene, "scene to augment")->required();
  aug_cmd->add_option("--bank", aug.bank, "scenes to extract instances from")->required();
  aug_cmd->add_option("--catalog", aug.catalog, "catalog file")->required();
  aug_cmd->add_option("--out", aug.out, "output scene file")->required();

  TrainOptions pre;
  auto* pre_cmd = app.add_subcommand("pretrain", "anchor encoder features to category embeddings");
  add_common(pre_cmd, pre.common);
  pre_cmd->add_option("--scenes", pre.scenes, "training scene files or directories")->required();
  pre_cmd->add_option("--catalog", pre.catalog, "catalog file")->required();
  pre_cmd->add_option("--embeddings", pre.embeddings, "EMB1 embedding file");
  pre_cmd->add_option("--anchor-dim", pre.anchor_dim, "use synthetic anchors of this width instead");
  pre_cmd->add_option("--out", pre.out, "output checkpoint")->required();

  TrainOptions fine;
  auto* fine_cmd = app.add_subcommand("finetune", "train encoder and classifier on labeled scenes");
  add_common(fine_cmd, fine.common);
  fine_cmd->add_option("--scenes", fine.scenes, "training scene files or directories")->required();
  fine_cmd->add_option("--catalog", fine.catalog, "catalog file")->required();
  fine_cmd->add_option("--init", fine.init, "checkpoint whose encoder initializes training");
  fine_cmd->add_option("--out", fine.out, "output checkpoint")->required();

  PredictOptions pred;
  auto* pred_cmd = app.add_subcommand("predict", "label the points of scenes");
  add_common(pred_cmd, pred.common);
  pred_cmd->add_option("--checkpoint", pred.checkpoint, "trained checkpoint")->required();
  pred_cmd->add_option("--scenes", pred.scenes, "scene files or directories")->required();
  pred_cmd->add_option("--catalog", pred.catalog, "catalog file (head-less checkpoints)");
  pred_cmd->add_option("--embeddings", pred.embeddings, "EMB1 file (head-less checkpoints)");
  pred_cmd->add_option("--out", pred.out, "output directory")->required();

  EvalOptions ev;
  auto* ev_cmd = app.add_subcommand("eval", "semantic segmentation metrics");
  add_common(ev_cmd, ev.common);
  ev_cmd->add_option("--gt", ev.gt, "ground-truth scene files or directories")->required();
  ev_cmd->add_option("--pred", ev.pred, "prediction files or directories, aligned with --gt in name order")->required();
  ev_cmd->add_option("--catalog", ev.catalog, "catalog file for names and splits");
  ev_cmd->add_option("--out", ev.out, "write report.txt and report.json here");

  EvalInstOptions evi;
  auto* evi_cmd = app.add_subcommand("eval-inst", "instance segmentation average precision");
  add_common(evi_cmd, evi.common);
  evi_cmd->add_option("--gt", evi.gt, "ground-truth scene")->required();
  evi_cmd->add_option("--pred", evi.pred, "instance predictions: category, confidence, point indices")->required();
  evi_cmd->add_option("--out", evi.out, "output directory");

  AnnotateOptions ann;
  auto* ann_cmd = app.add_subcommand("annotate", "limited-annotation label masks");
  add_common(ann_cmd, ann.common);
  ann_cmd->add_option("--scenes", ann.scenes, "scene files or directories")->required();
  ann_cmd->add_option("--fraction", ann.fraction, "fraction of labeled points to keep")->required();
  ann_cmd->add_option("--out", ann.out, "output directory")->required();

  PcaOptions pca;
  auto* pca_cmd = app.add_subcommand("pca", "project embeddings onto their principal components");
  add_common(pca_cmd, pca.common);
  pca_cmd->add_option("--embeddings", pca.embeddings, "EMB1 input")->required();
  pca_cmd->add_option("--dim", pca.dim, "output width")->required()->check(CLI::PositiveNumber);
  pca_cmd->add_option("--out", pca.out, "EMB1 output")->required();

  ImportOptions imp;
  auto* imp_cmd = app.add_subcommand("embed-import", "write an EMB1 embedding file");
  add_common(imp_cmd, imp.common);
  imp_cmd->add_option("--text", imp.text, "text rows: name<TAB>values");
  imp_cmd->add_option("--synthetic", imp.synthetic_dim, "synthetic anchors of this width for --catalog");
  imp_cmd->add_option("--catalog", imp.catalog, "catalog file");
  imp_cmd->add_option("--out", imp.out, "EMB1 output")->required();

  ExperimentOptions exp;
  auto* exp_cmd = app.add_subcommand("experiment", "compare training arms over seeds on a synthetic corpus");
  add_common(exp_cmd, exp.common, false);
  exp_cmd->add_option("--out", exp.out, "write table.txt and results.json here");

  try {
    std::vector<std::string> reversed(args.begin(), args.end());
    std::reverse(reversed.begin(), reversed.end());
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      return app.exit(e, out, err) == 0 ? 0 : 1;
    }
    if (gen_cmd->parsed()) return cmd_gen(gen, args, out);
    if (stats_cmd->parsed()) return cmd_stats(stats, args, out);
    if (aug_cmd->parsed()) return cmd_augment(aug, args, out);
    if (pre_cmd->parsed()) return cmd_pretrain(pre, args, out);
    if (fine_cmd->parsed()) return cmd_finetune(fine, args, out);
    if (pred_cmd->parsed()) return cmd_predict(pred, args, out);
    if (ev_cmd->parsed()) return cmd_eval(ev, args, out);
    if (evi_cmd->parsed()) return cmd_eval_inst(evi, args, out);
    if (ann_cmd->parsed()) return cmd_annotate(ann, args, out);
    if (pca_cmd->parsed()) return cmd_pca(pca, args, out);
    if (imp_cmd->parsed()) return cmd_embed_import(imp, args, out);
    if (exp_cmd->parsed()) return cmd_experiment(exp, args, out, err);
    return 1;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace lgseg
