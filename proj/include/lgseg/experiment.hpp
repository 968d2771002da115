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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lgseg/bench.hpp"
#include "lgseg/config.hpp"
#include "lgseg/embed.hpp"
#include "lgseg/synthetic.hpp"
#include "lgseg/train.hpp"

namespace lgseg {

// One training recipe: optional contrastive pretraining, the fine-tuning
// loss, and online instance augmentation.
struct Arm {
  bool pretrain = false;
  ClassLoss loss = ClassLoss::ce;
  bool augment = false;

  // "scratch+ce", "pretrain+cfocal+augment", ...
  std::string name() const;
  // name(), except the full recipe (pretrain, cfocal, augment) reads "ours".
  std::string label() const;
  bool operator==(const Arm&) const = default;
};
Arm parse_arm(std::string_view text);

struct ExperimentConfig {
  SyntheticSpec corpus;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t train_scenes = 40;
  std::size_t val_scenes = 10;
  std::vector<Arm> arms;
  TrainConfig pretrain;
  TrainConfig finetune;
  double annotation_fraction = 1.0;
  std::size_t workers = 1;
};

// Defaults: pretrain 60 epochs, fine-tune 40, milestones at 55% / 85%.
ExperimentConfig default_experiment();
// Keys: seeds, train_scenes, val_scenes, arms, fraction, workers,
// pretrain.<train key>, finetune.<train key>, plain train keys (both stages)
// and synthetic corpus keys. Throws UsageError on unknown keys.
ExperimentConfig experiment_config(const KeyValues& kv);
std::vector<std::string> experiment_keys();

struct Corpus {
  LabelCatalog catalog;  // counts and splits from the training scenes
  std::vector<Scene> train;
  std::vector<Scene> val;
  EmbeddingTable anchors;
};

// Scenes from named substreams of `seed`; category counts below 2 are raised
// to 2 so the class-balancing weights stay defined.
Corpus build_corpus(const SyntheticSpec& spec, std::size_t n_train, std::size_t n_val, std::uint64_t seed,
                    std::size_t anchor_dim);

EvalReport evaluate(const Model& model, std::span<const Scene> scenes, const LabelCatalog& catalog,
                    const TrainConfig& cfg, std::size_t workers = 1);

struct ArmRun {
  Arm arm;
  std::uint64_t seed = 0;
  EvalReport report;
};

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single seed
};

struct ArmSummary {
  Arm arm;
  MeanStd head;
  MeanStd common;
  MeanStd tail;
  MeanStd all;
};

struct ExperimentResult {
  std::vector<ArmRun> runs;
  std::vector<ArmSummary> summary;
};

// Runs every arm for every seed; progress lines go to `progress` when set.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

// mIoU in percent, mean +- stddev over seeds.
std::string format_table(const ExperimentResult& result);
std::string experiment_json(const ExperimentResult& result);

}  // namespace lgseg
