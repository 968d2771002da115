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

#include "lgseg/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <ostream>

#include "lgseg/error.hpp"
#include "lgseg/parallel.hpp"
#include "text_util.hpp"

namespace lgseg {
namespace {

constexpr std::string_view kExperimentKeys[] = {"seeds", "train_scenes", "val_scenes", "arms", "fraction", "workers"};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

std::string cell(const MeanStd& m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f +- %.2f", 100.0 * m.mean, 100.0 * m.stddev);
  return buf;
}

// Stage-prefixed keys ("pretrain.lr") override the shared ones ("lr").
KeyValues stage_view(const KeyValues& kv, std::string_view stage) {
  KeyValues shared;
  KeyValues specific;
  const std::string prefix = std::string(stage) + ".";
  for (const auto& [k, v] : kv.entries()) {
    if (k.rfind(prefix, 0) == 0) {
      specific.set(k.substr(prefix.size()), v);
    } else {
      shared.set(k, v);
    }
  }
  shared.merge(specific);
  return shared;
}

}  // namespace

std::string Arm::name() const {
  std::string out = pretrain ? "pretrain" : "scratch";
  out += "+" + std::string(to_string(loss));
  if (augment) out += "+augment";
  return out;
}

std::string Arm::label() const {
  return pretrain && loss == ClassLoss::cfocal && augment ? "ours" : name();
}

Arm parse_arm(std::string_view text) {
  if (text == "ours") return Arm{true, ClassLoss::cfocal, true};
  const auto parts = text::split(text, '+');
  if (parts.size() < 2 || parts.size() > 3) throw UsageError("malformed arm '" + std::string(text) + "'");
  Arm arm;
  if (parts[0] == "pretrain") {
    arm.pretrain = true;
  } else if (parts[0] != "scratch") {
    throw UsageError("arm must start with scratch or pretrain: '" + std::string(text) + "'");
  }
  arm.loss = parse_class_loss(parts[1]);
  if (parts.size() == 3) {
    if (parts[2] != "augment") throw UsageError("unknown arm option '" + std::string(parts[2]) + "'");
    arm.augment = true;
  }
  return arm;
}

ExperimentConfig default_experiment() {
  ExperimentConfig cfg;
  cfg.arms = {Arm{false, ClassLoss::ce, false}, Arm{false, ClassLoss::cfocal, false},
              Arm{true, ClassLoss::cfocal, true}};
  cfg.pretrain.epochs = 60;
  cfg.pretrain.milestones = default_milestones(cfg.pretrain.epochs);
  cfg.finetune.epochs = 40;
  cfg.finetune.milestones = default_milestones(cfg.finetune.epochs);
  cfg.finetune.augment_cfg.structural_ids = {kFloorId, kWallId};
  cfg.pretrain.augment_cfg.structural_ids = {kFloorId, kWallId};
  return cfg;
}

std::vector<std::string> experiment_keys() {
  std::vector<std::string> keys(std::begin(kExperimentKeys), std::end(kExperimentKeys));
  for (auto k : train_keys()) {
    keys.emplace_back(k);
    keys.push_back("pretrain." + std::string(k));
    keys.push_back("finetune." + std::string(k));
  }
  for (auto k : synthetic_keys()) keys.emplace_back(k);
  return keys;
}

ExperimentConfig experiment_config(const KeyValues& kv) {
  const auto keys = experiment_keys();
  std::vector<std::string_view> views(keys.begin(), keys.end());
  const auto bad = kv.unknown(views);
  if (!bad.empty()) throw UsageError("unknown experiment key '" + bad.front() + "'");

  ExperimentConfig cfg = default_experiment();
  apply(kv, cfg.corpus);
  cfg.seeds = kv.integers("seeds", cfg.seeds);
  if (cfg.seeds.empty()) throw UsageError("experiment needs at least one seed");
  cfg.train_scenes = kv.integer("train_scenes", cfg.train_scenes);
  cfg.val_scenes = kv.integer("val_scenes", cfg.val_scenes);
  cfg.annotation_fraction = kv.number("fraction", cfg.annotation_fraction);
  cfg.workers = kv.integer("workers", cfg.workers);
  if (kv.contains("arms")) {
    cfg.arms.clear();
    for (const auto& w : kv.words("arms", {})) cfg.arms.push_back(parse_arm(w));
  }
  if (cfg.arms.empty()) throw UsageError("experiment needs at least one arm");
  for (auto* stage : {&cfg.pretrain, &cfg.finetune}) {
    const KeyValues view = stage_view(kv, stage == &cfg.pretrain ? "pretrain" : "finetune");
    apply(view, *stage);
    if (!view.contains("milestones")) stage->milestones = default_milestones(stage->epochs);
    stage->workers = cfg.workers;
    stage->validate();
  }
  if (!(cfg.annotation_fraction > 0.0 && cfg.annotation_fraction <= 1.0)) {
    throw UsageError("fraction must lie in (0, 1]");
  }
  return cfg;
}

Corpus build_corpus(const SyntheticSpec& spec, std::size_t n_train, std::size_t n_val, std::uint64_t seed,
                    std::size_t anchor_dim) {
  spec.validate();
  Corpus corpus;
  const LabelCatalog names = synthetic_catalog(spec.n_categories);
  corpus.train.resize(n_train);
  corpus.val.resize(n_val);
  for (std::size_t i = 0; i < n_train; ++i) {
    corpus.train[i] = generate_synthetic_scene(spec, names, mix_seed(seed, "corpus/train/" + std::to_string(i)));
  }
  for (std::size_t i = 0; i < n_val; ++i) {
    corpus.val[i] = generate_synthetic_scene(spec, names, mix_seed(seed, "corpus/val/" + std::to_string(i)));
  }
  auto counts = scene_stats(corpus.train, names.size());
  for (auto& c : counts) {
    c.instance_count = std::max<std::uint64_t>(c.instance_count, 2);
    c.point_count = std::max<std::uint64_t>(c.point_count, 2);
  }
  corpus.catalog = with_counts(names, counts);
  corpus.anchors = synthetic_anchors(names.size(), anchor_dim, mix_seed(seed, "anchors"), corpus.catalog.names());
  return corpus;
}

EvalReport evaluate(const Model& model, std::span<const Scene> scenes, const LabelCatalog& catalog,
                    const TrainConfig& cfg, std::size_t workers) {
  std::vector<ConfusionMatrix> parts(scenes.size(), ConfusionMatrix(catalog.size()));
  parallel_for(scenes.size(), workers, [&](std::size_t i) {
    const auto pred = predict(model, scenes[i], cfg);
    std::vector<CategoryId> gt(scenes[i].points.size());
    for (std::size_t p = 0; p < gt.size(); ++p) gt[p] = scenes[i].points[p].semantic;
    accumulate(parts[i], gt, pred);
  });
  ConfusionMatrix cm(catalog.size());
  for (const auto& p : parts) cm.merge(p);
  return metrics(cm, catalog.splits());
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* progress) {
  ExperimentResult result;
  for (std::uint64_t seed : cfg.seeds) {
    const Corpus corpus =
        build_corpus(cfg.corpus, cfg.train_scenes, cfg.val_scenes, seed, cfg.finetune.shape.output);
    std::vector<std::vector<bool>> masks;
    if (cfg.annotation_fraction < 1.0) {
      for (std::size_t i = 0; i < corpus.train.size(); ++i) {
        Rng rng = Rng::substream(seed, "annotate/scene=" + std::to_string(i));
        masks.push_back(sample_limited_annotations(corpus.train[i], cfg.annotation_fraction, rng));
      }
    }
    std::optional<EncoderParams> pretrained;
    for (const Arm& arm : cfg.arms) {
      TrainConfig ft = cfg.finetune;
      ft.seed = seed;
      ft.loss = arm.loss;
      ft.augment = arm.augment;
      EncoderParams init;
      if (arm.pretrain) {
        if (!pretrained) {
          TrainConfig pt = cfg.pretrain;
          pt.seed = seed;
          pt.shape = ft.shape;
          pretrained = pretrain(corpus.train, corpus.catalog, corpus.anchors, pt);
        }
        init = *pretrained;
      } else {
        init = initial_encoder(ft);
      }
      const Model model = finetune(init, corpus.train, corpus.catalog, masks, ft);
      ArmRun run{arm, seed, evaluate(model, corpus.val, corpus.catalog, ft, cfg.workers)};
      if (progress) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "seed %llu %-28s head %.4f common %.4f tail %.4f all %.4f\n",
                      static_cast<unsigned long long>(seed), arm.name().c_str(), run.report.head.iou,
                      run.report.common.iou, run.report.tail.iou, run.report.all.iou);
        *progress << buf << std::flush;
      }
      result.runs.push_back(std::move(run));
    }
  }
  for (const Arm& arm : cfg.arms) {
    std::vector<double> head, common, tail, all;
    for (const auto& run : result.runs) {
      if (!(run.arm == arm)) continue;
      head.push_back(run.report.head.iou);
      common.push_back(run.report.common.iou);
      tail.push_back(run.report.tail.iou);
      all.push_back(run.report.all.iou);
    }
    result.summary.push_back({arm, mean_std(head), mean_std(common), mean_std(tail), mean_std(all)});
  }
  return result;
}

std::string format_table(const ExperimentResult& result) {
  std::string out = "arm\thead\tcommon\ttail\tall\n";
  for (const auto& s : result.summary) {
    out += s.arm.label() + '\t' + cell(s.head) + '\t' + cell(s.common) + '\t' + cell(s.tail) + '\t' + cell(s.all) +
           '\n';
  }
  return out;
}

std::string experiment_json(const ExperimentResult& result) {
  auto ms = [](const MeanStd& m) { return nlohmann::json{{"mean", m.mean}, {"stddev", m.stddev}}; };
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& s : result.summary) {
    arms.push_back({{"arm", s.arm.name()},
                    {"label", s.arm.label()},
                    {"head", ms(s.head)},
                    {"common", ms(s.common)},
                    {"tail", ms(s.tail)},
                    {"all", ms(s.all)}});
  }
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : result.runs) {
    runs.push_back({{"arm", r.arm.name()},
                    {"seed", r.seed},
                    {"head", r.report.head.iou},
                    {"common", r.report.common.iou},
                    {"tail", r.report.tail.iou},
                    {"all", r.report.all.iou}});
  }
  return nlohmann::json{{"arms", std::move(arms)}, {"runs", std::move(runs)}}.dump(2) + "\n";
}

}  // namespace lgseg
