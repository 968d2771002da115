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

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lgseg/augment.hpp"
#include "lgseg/catalog.hpp"
#include "lgseg/embed.hpp"
#include "lgseg/losses.hpp"
#include "lgseg/model.hpp"
#include "lgseg/scene.hpp"
#include "lgseg/voxel.hpp"

namespace lgseg {

enum class ClassLoss { ce, weighted_ce, focal, cfocal };
enum class PretrainObjective { anchor, supcon };

std::string_view to_string(ClassLoss loss);
ClassLoss parse_class_loss(std::string_view text);
std::string_view to_string(PretrainObjective objective);
PretrainObjective parse_pretrain_objective(std::string_view text);

struct TrainConfig {
  double lr = 0.05;
  double momentum = 0.9;
  double decay = 0.3;
  std::vector<std::size_t> milestones;  // epochs at which lr is multiplied by decay
  std::size_t epochs = 40;
  std::size_t batch = 8;
  std::uint64_t seed = 0;
  bool use_color = true;
  double resolution = kDefaultResolution;
  // Labeled cells drawn (with replacement) per scene and step; 0 uses every
  // labeled cell.
  std::size_t cells_per_scene = 1024;
  EncoderShape shape;

  ClassLoss loss = ClassLoss::cfocal;
  double gamma = 2.0;
  // Multiply the class-balancing alphas by N so their mean is 1 instead of 1/N.
  bool scale_alpha = true;

  PretrainObjective objective = PretrainObjective::anchor;
  ContrastiveConfig contrastive;
  double temperature = 0.1;
  std::size_t supcon_pos = 5;
  std::size_t supcon_neg = 5;
  std::size_t supcon_sources = 256;

  bool augment = false;
  AugmentConfig augment_cfg;

  std::size_t workers = 1;

  void validate() const;
};

// Milestones at 55% and 85% of the run.
std::vector<std::size_t> default_milestones(std::size_t epochs);

// lr * decay^(milestones <= epoch).
double lr_at(const TrainConfig& cfg, std::size_t epoch);

struct TrainLog {
  std::vector<double> epoch_loss;
  std::size_t steps = 0;
};

struct Model {
  EncoderParams encoder;
  ClassifierHead head;
};

// Encoder initialized from the "init/encoder" stream of cfg.seed.
EncoderParams initial_encoder(const TrainConfig& cfg);

// Voxelized training inputs of one scene.
struct PreparedScene {
  SceneFrame frame;
  Eigen::MatrixXf features;            // cells x kFeatureDim
  std::vector<CategoryId> labels;      // per cell majority
  std::vector<std::uint32_t> labeled;  // cells with a label
};

// Cells touched by points appended to a prepared scene. Touched base cells
// are re-aggregated over old and new members; features use the base frame.
struct PreparedOverlay {
  Eigen::MatrixXf features;
  std::vector<CategoryId> labels;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> replaced;  // (base cell, row), sorted
  std::vector<std::uint32_t> labeled;  // labeled rows not standing in for a labeled base cell
};
PreparedOverlay prepare_overlay(const SparseVoxelGrid& base_grid, const Scene& base_scene,
                                const PreparedScene& base, std::span<const PointRecord> appended,
                                const TrainConfig& cfg);
PreparedScene prepare_scene(const Scene& scene, const TrainConfig& cfg);
PreparedScene prepare_scene(const SparseVoxelGrid& grid, const Scene& scene, const TrainConfig& cfg);

// Contrastive anchoring of encoder features to the table rows. Throws
// DimensionError when the table does not match the catalog or encoder width.
EncoderParams pretrain(std::span<const Scene> scenes, const LabelCatalog& catalog, const EmbeddingTable& table,
                       const TrainConfig& cfg, TrainLog* log = nullptr);

// Per-category weights used by the selected classification loss (empty for
// unweighted losses).
std::vector<double> class_weights(const LabelCatalog& catalog, const TrainConfig& cfg);

// Supervised training of encoder and a fresh head on masked labels (empty
// masks: every point labeled). With cfg.augment, tail instances of the masked
// training scenes are inserted online.
Model finetune(const EncoderParams& init, std::span<const Scene> scenes, const LabelCatalog& catalog,
               std::span<const std::vector<bool>> masks, const TrainConfig& cfg, TrainLog* log = nullptr);

std::vector<CategoryId> predict(const Model& model, const Scene& scene, const TrainConfig& cfg);

// Per row: category whose anchor has the smallest cosine distance (ties:
// lowest id).
std::vector<CategoryId> nearest_anchor_labels(const Eigen::MatrixXd& features, const Eigen::MatrixXd& anchors);
std::vector<CategoryId> nearest_anchor_classify(const EncoderParams& params, const EmbeddingTable& table,
                                                const Scene& scene, const TrainConfig& cfg);

}  // namespace lgseg
