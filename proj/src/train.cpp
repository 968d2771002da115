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

#include "lgseg/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lgseg/error.hpp"
#include "lgseg/parallel.hpp"

namespace lgseg {
namespace {

struct Batch {
  Eigen::MatrixXd features;
  std::vector<CategoryId> labels;
  std::vector<std::size_t> offsets{0};  // scene blocks within the rows
};

// A prepared scene, optionally with inserted instances layered on top.
struct SceneView {
  const PreparedScene* base = nullptr;
  const PreparedOverlay* overlay = nullptr;

  std::size_t labeled_count() const { return base->labeled.size() + (overlay ? overlay->labeled.size() : 0); }

  // Features row and label of the k-th labeled cell.
  std::pair<const float*, CategoryId> cell(std::size_t k, Eigen::RowVectorXf& scratch) const {
    auto from = [&scratch](const Eigen::MatrixXf& m, std::uint32_t row) {
      scratch = m.row(row);
      return scratch.data();
    };
    if (k >= base->labeled.size()) {
      const auto row = overlay->labeled[k - base->labeled.size()];
      return {from(overlay->features, row), overlay->labels[row]};
    }
    const auto c = base->labeled[k];
    if (overlay) {
      auto it = std::lower_bound(overlay->replaced.begin(), overlay->replaced.end(), std::make_pair(c, 0u));
      if (it != overlay->replaced.end() && it->first == c) return {from(overlay->features, it->second), overlay->labels[it->second]};
    }
    return {from(base->features, c), base->labels[c]};
  }
};

// Draws the step's cells from each scene; scenes without labeled cells
// contribute nothing.
Batch gather(std::span<const SceneView> views, std::size_t cells_per_scene, Rng& rng) {
  std::vector<std::pair<const SceneView*, std::vector<std::size_t>>> picks;
  std::size_t total = 0;
  for (const SceneView& v : views) {
    const std::size_t n = v.labeled_count();
    if (n == 0) continue;
    std::vector<std::size_t> cells;
    if (cells_per_scene == 0 || cells_per_scene >= n) {
      cells.resize(n);
      for (std::size_t k = 0; k < n; ++k) cells[k] = k;
    } else {
      cells.resize(cells_per_scene);
      for (auto& c : cells) c = static_cast<std::size_t>(rng.below(n));
    }
    total += cells.size();
    picks.emplace_back(&v, std::move(cells));
  }
  Batch b;
  b.features.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(kFeatureDim));
  b.labels.reserve(total);
  Eigen::RowVectorXf scratch;
  Eigen::Index row = 0;
  for (const auto& [v, cells] : picks) {
    for (auto k : cells) {
      const auto [feat, label] = v->cell(k, scratch);
      for (std::size_t f = 0; f < kFeatureDim; ++f) b.features(row, static_cast<Eigen::Index>(f)) = feat[f];
      ++row;
      b.labels.push_back(label);
    }
    b.offsets.push_back(b.labels.size());
  }
  return b;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = Rng::substream(seed, "shuffle/epoch=" + std::to_string(epoch));
  std::shuffle(order.begin(), order.end(), rng.engine());
  return order;
}

std::string step_context(const char* stage, std::size_t epoch, std::size_t step) {
  return std::string(stage) + " epoch " + std::to_string(epoch) + " step " + std::to_string(step) + ": ";
}

Eigen::Block<Eigen::MatrixXd> block_rows(Eigen::MatrixXd& m, const Batch& b, std::size_t k) {
  return m.middleRows(static_cast<Eigen::Index>(b.offsets[k]), static_cast<Eigen::Index>(b.offsets[k + 1] - b.offsets[k]));
}

std::span<const CategoryId> block_labels(const Batch& b, std::size_t k) {
  return std::span<const CategoryId>(b.labels).subspan(b.offsets[k], b.offsets[k + 1] - b.offsets[k]);
}

LossOutput class_loss(const Eigen::MatrixXd& logits, std::span<const CategoryId> labels, const TrainConfig& cfg,
                      std::span<const double> weights) {
  switch (cfg.loss) {
    case ClassLoss::ce:
      return cross_entropy(logits, labels);
    case ClassLoss::weighted_ce:
      return weighted_ce(logits, labels, weights);
    case ClassLoss::focal:
      return focal(logits, labels, cfg.gamma);
    case ClassLoss::cfocal:
      return cfocal(logits, labels, cfg.gamma, weights);
  }
  return cross_entropy(logits, labels);
}

}  // namespace

std::string_view to_string(ClassLoss loss) {
  switch (loss) {
    case ClassLoss::ce:
      return "ce";
    case ClassLoss::weighted_ce:
      return "weighted_ce";
    case ClassLoss::focal:
      return "focal";
    case ClassLoss::cfocal:
      return "cfocal";
  }
  return "ce";
}

ClassLoss parse_class_loss(std::string_view text) {
  if (text == "ce") return ClassLoss::ce;
  if (text == "weighted_ce") return ClassLoss::weighted_ce;
  if (text == "focal") return ClassLoss::focal;
  if (text == "cfocal") return ClassLoss::cfocal;
  throw UsageError("unknown loss '" + std::string(text) + "'");
}

std::string_view to_string(PretrainObjective objective) {
  return objective == PretrainObjective::anchor ? "anchor" : "supcon";
}

PretrainObjective parse_pretrain_objective(std::string_view text) {
  if (text == "anchor") return PretrainObjective::anchor;
  if (text == "supcon") return PretrainObjective::supcon;
  throw UsageError("unknown pretraining objective '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw UsageError("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw UsageError("momentum must lie in [0, 1)");
  if (!(decay > 0.0 && decay <= 1.0)) throw UsageError("decay must lie in (0, 1]");
  if (batch == 0) throw UsageError("batch must be positive");
  if (!(resolution > 0.0)) throw UsageError("resolution must be positive");
  if (!(gamma >= 0.0)) throw UsageError("gamma must be non-negative");
  if (!(temperature > 0.0)) throw UsageError("temperature must be positive");
  contrastive.validate();
  augment_cfg.validate();
}

std::vector<std::size_t> default_milestones(std::size_t epochs) {
  const auto at = [epochs](double f) { return static_cast<std::size_t>(std::lround(f * static_cast<double>(epochs))); };
  return {at(0.55), at(0.85)};
}

double lr_at(const TrainConfig& cfg, std::size_t epoch) {
  double lr = cfg.lr;
  for (std::size_t m : cfg.milestones) {
    if (m <= epoch) lr *= cfg.decay;
  }
  return lr;
}

EncoderParams initial_encoder(const TrainConfig& cfg) {
  Rng rng = Rng::substream(cfg.seed, "init/encoder");
  return init_encoder(cfg.shape, rng);
}

PreparedScene prepare_scene(const Scene& scene, const TrainConfig& cfg) {
  return prepare_scene(voxelize(scene, cfg.resolution), scene, cfg);
}

PreparedScene prepare_scene(const SparseVoxelGrid& grid, const Scene& scene, const TrainConfig& cfg) {
  PreparedScene out;
  out.frame = scene_frame(scene);
  out.features = point_features(grid, scene, cfg.use_color).cast<float>();
  out.labels.resize(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    out.labels[c] = grid.aggregates()[c].majority;
    if (out.labels[c] != kUnlabeled) out.labeled.push_back(static_cast<std::uint32_t>(c));
  }
  return out;
}

PreparedOverlay prepare_overlay(const SparseVoxelGrid& base_grid, const Scene& base_scene,
                                const PreparedScene& base, std::span<const PointRecord> appended,
                                const TrainConfig& cfg) {
  Scene added;
  added.points.assign(appended.begin(), appended.end());
  const SparseVoxelGrid grid = voxelize(added, cfg.resolution);
  PreparedOverlay out;
  out.features.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(kFeatureDim));
  out.labels.resize(grid.size());
  std::vector<CategoryId> labels;
  double row[kFeatureDim];
  for (std::size_t c = 0; c < grid.size(); ++c) {
    auto agg = grid.aggregates()[c];
    const auto hit = base_grid.find(grid.keys()[c]);
    bool base_labeled = false;
    if (hit) {
      const auto old_members = base_grid.points_of(*hit);
      const auto new_members = grid.points_of(c);
      const double nb = static_cast<double>(old_members.size());
      const double nn = static_cast<double>(new_members.size());
      const auto& old_agg = base_grid.aggregates()[*hit];
      for (int k = 0; k < 3; ++k) agg.mean_color[k] = (nb * old_agg.mean_color[k] + nn * agg.mean_color[k]) / (nb + nn);
      labels.clear();
      for (auto i : old_members) labels.push_back(base_scene.points[i].semantic);
      for (auto i : new_members) labels.push_back(added.points[i].semantic);
      agg.majority = majority_label(labels);
      base_labeled = old_agg.majority != kUnlabeled;
      out.replaced.emplace_back(static_cast<std::uint32_t>(*hit), static_cast<std::uint32_t>(c));
    }
    cell_features(base.frame, grid.center(c), agg.mean_color, cfg.use_color, row);
    for (std::size_t f = 0; f < kFeatureDim; ++f) {
      out.features(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(f)) = static_cast<float>(row[f]);
    }
    out.labels[c] = agg.majority;
    if (agg.majority != kUnlabeled && !base_labeled) out.labeled.push_back(static_cast<std::uint32_t>(c));
  }
  std::sort(out.replaced.begin(), out.replaced.end());
  return out;
}

EncoderParams pretrain(std::span<const Scene> scenes, const LabelCatalog& catalog, const EmbeddingTable& table,
                       const TrainConfig& cfg, TrainLog* log) {
  cfg.validate();
  if (table.size() != catalog.size()) {
    throw DimensionError("anchor table has " + std::to_string(table.size()) + " rows for " +
                         std::to_string(catalog.size()) + " categories");
  }
  TrainConfig shaped = cfg;
  shaped.shape.output = table.dim();
  EncoderParams params = initial_encoder(shaped);

  std::vector<PreparedScene> prepared(scenes.size());
  parallel_for(scenes.size(), cfg.workers, [&](std::size_t i) { prepared[i] = prepare_scene(scenes[i], cfg); });

  SgdState state;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(cfg, epoch);
    const auto order = epoch_order(scenes.size(), cfg.seed, epoch);
    double epoch_loss = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch, ++step) {
      try {
        std::vector<SceneView> members;
        for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch); ++i) {
          members.push_back({&prepared[order[i]], nullptr});
        }
        Rng rng = Rng::substream(cfg.seed, "pretrain/step=" + std::to_string(step));
        const Batch b = gather(members, cfg.cells_per_scene, rng);
        const std::size_t blocks = b.offsets.size() - 1;
        if (blocks == 0) continue;
        ForwardCache cache;
        Eigen::MatrixXd y = encode(params, b.features, cache);
        Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(y.rows(), y.cols());
        double loss = 0.0;
        for (std::size_t k = 0; k < blocks; ++k) {
          const Eigen::MatrixXd yk = block_rows(y, b, k);
          const auto labels = block_labels(b, k);
          LossOutput out;
          if (cfg.objective == PretrainObjective::anchor) {
            const NegativeSets negs = sample_negatives(labels, catalog, cfg.contrastive.n_neg, rng);
            out = loss_total(yk, labels, table.rows, negs, cfg.contrastive);
          } else {
            const ContrastPairs pairs =
                sample_contrast_pairs(labels, cfg.supcon_pos, cfg.supcon_neg, rng, cfg.supcon_sources);
            out = supcon_loss(yk, pairs, cfg.temperature);
          }
          loss += out.value / static_cast<double>(blocks);
          block_rows(grad, b, k) = out.gradient / static_cast<double>(blocks);
        }
        if (!std::isfinite(loss)) throw NumericError("non-finite pretraining loss");
        sgd_step(params, encode_backward(params, cache, grad), state, lr, cfg.momentum);
        epoch_loss += loss;
        ++epoch_steps;
      } catch (const NumericError& e) {
        throw NumericError(step_context("pretrain", epoch, step) + e.what());
      }
    }
    if (log) {
      log->epoch_loss.push_back(epoch_steps ? epoch_loss / static_cast<double>(epoch_steps) : 0.0);
      log->steps += epoch_steps;
    }
  }
  return params;
}

std::vector<double> class_weights(const LabelCatalog& catalog, const TrainConfig& cfg) {
  const double n = static_cast<double>(catalog.size());
  std::vector<double> w;
  if (cfg.loss == ClassLoss::cfocal) {
    w = alpha_weights(catalog);
    if (cfg.scale_alpha) {
      for (double& x : w) x *= n;
    }
  } else if (cfg.loss == ClassLoss::weighted_ce) {
    std::vector<CategoryId> ids(catalog.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<CategoryId>(i);
    w = inverse_log_weights(catalog, ids);
    for (double& x : w) x *= n;
  }
  return w;
}

Model finetune(const EncoderParams& init, std::span<const Scene> scenes, const LabelCatalog& catalog,
               std::span<const std::vector<bool>> masks, const TrainConfig& cfg, TrainLog* log) {
  cfg.validate();
  if (!masks.empty() && masks.size() != scenes.size()) throw DimensionError("one annotation mask per scene required");
  Model model{init, {}};
  {
    Rng rng = Rng::substream(cfg.seed, "init/head");
    model.head = init_head(catalog.size(), init.output_dim(), rng);
  }
  const std::vector<double> weights = class_weights(catalog, cfg);

  std::vector<Scene> masked;
  masked.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    masked.push_back(masks.empty() ? scenes[i] : apply_mask(scenes[i], masks[i]));
  }
  InstanceBank bank;
  if (cfg.augment && cfg.augment_cfg.n_samples > 0) {
    const auto tail = catalog.ids_in(Split::tail);
    bank = extract_instances(masked, tail);
  }
  const bool online = cfg.augment && !bank.empty();

  std::vector<PreparedScene> prepared(scenes.size());
  // Grids and insertion contexts of the unaugmented scenes, reused every epoch.
  std::vector<SparseVoxelGrid> grids(online ? scenes.size() : 0);
  std::vector<AugmentContext> contexts(online ? scenes.size() : 0);
  parallel_for(scenes.size(), cfg.workers, [&](std::size_t i) {
    if (online) {
      grids[i] = voxelize(masked[i], cfg.resolution);
      prepared[i] = prepare_scene(grids[i], masked[i], cfg);
      contexts[i] = make_augment_context(masked[i], cfg.augment_cfg);
    } else {
      prepared[i] = prepare_scene(masked[i], cfg);
    }
  });
  const bool any_labeled = std::any_of(prepared.begin(), prepared.end(), [](const PreparedScene& p) {
    return !p.labeled.empty();
  });
  if (!any_labeled) return model;

  SgdState enc_state;
  SgdState head_state;
  std::size_t step = 0;
  std::vector<PreparedScene> jittered(cfg.batch);
  std::vector<PreparedOverlay> overlays(cfg.batch);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(cfg, epoch);
    const auto order = epoch_order(scenes.size(), cfg.seed, epoch);
    double epoch_loss = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch, ++step) {
      try {
        const std::size_t end = std::min(order.size(), start + cfg.batch);
        std::vector<SceneView> members;
        if (online) {
          members.resize(end - start);
          parallel_for(end - start, cfg.workers, [&](std::size_t k) {
            const std::size_t s = order[start + k];
            Rng rng = Rng::substream(cfg.seed, "augment/epoch=" + std::to_string(epoch) + "/scene=" + std::to_string(s));
            const auto added = plan_insertions(contexts[s], bank, catalog, cfg.augment_cfg, rng);
            if (cfg.augment_cfg.jitter_sigma > 0.0) {
              Scene aug = masked[s];
              aug.points.insert(aug.points.end(), added.begin(), added.end());
              jittered[k] = prepare_scene(color_jitter(aug, cfg.augment_cfg.jitter_sigma, rng), cfg);
              members[k] = {&jittered[k], nullptr};
            } else {
              overlays[k] = prepare_overlay(grids[s], masked[s], prepared[s], added, cfg);
              members[k] = {&prepared[s], &overlays[k]};
            }
          });
        } else {
          for (std::size_t i = start; i < end; ++i) members.push_back({&prepared[order[i]], nullptr});
        }
        Rng rng = Rng::substream(cfg.seed, "finetune/step=" + std::to_string(step));
        const Batch b = gather(members, cfg.cells_per_scene, rng);
        const std::size_t blocks = b.offsets.size() - 1;
        if (blocks == 0) continue;
        ForwardCache cache;
        Eigen::MatrixXd y = encode(model.encoder, b.features, cache);
        Eigen::MatrixXd logits = head_logits(model.head, y);
        Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
        double loss = 0.0;
        for (std::size_t k = 0; k < blocks; ++k) {
          const LossOutput out = class_loss(block_rows(logits, b, k), block_labels(b, k), cfg, weights);
          loss += out.value / static_cast<double>(blocks);
          block_rows(grad, b, k) = out.gradient / static_cast<double>(blocks);
        }
        if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
        const HeadGradients hg = head_backward(model.head, y, grad);
        const EncoderParams eg = encode_backward(model.encoder, cache, hg.features);
        sgd_step(model.head, hg.head, head_state, lr, cfg.momentum);
        sgd_step(model.encoder, eg, enc_state, lr, cfg.momentum);
        epoch_loss += loss;
        ++epoch_steps;
      } catch (const NumericError& e) {
        throw NumericError(step_context("finetune", epoch, step) + e.what());
      }
    }
    if (log) {
      log->epoch_loss.push_back(epoch_steps ? epoch_loss / static_cast<double>(epoch_steps) : 0.0);
      log->steps += epoch_steps;
    }
  }
  return model;
}

std::vector<CategoryId> predict(const Model& model, const Scene& scene, const TrainConfig& cfg) {
  const SparseVoxelGrid grid = voxelize(scene, cfg.resolution);
  const Eigen::MatrixXd logits =
      head_logits(model.head, encode(model.encoder, point_features(grid, scene, cfg.use_color)));
  return devoxelize(grid, argmax_rows(logits));
}

std::vector<CategoryId> nearest_anchor_labels(const Eigen::MatrixXd& features, const Eigen::MatrixXd& anchors) {
  if (features.cols() != anchors.cols()) throw DimensionError("feature width does not match anchors");
  Eigen::MatrixXd unit_anchors = anchors;
  for (Eigen::Index r = 0; r < unit_anchors.rows(); ++r) {
    const double n = unit_anchors.row(r).norm();
    if (n == 0.0) throw DegenerateEmbeddingError("zero anchor row");
    unit_anchors.row(r) /= n;
  }
  Eigen::MatrixXd cos = features * unit_anchors.transpose();
  for (Eigen::Index r = 0; r < cos.rows(); ++r) {
    const double n = features.row(r).norm();
    if (n > 0.0) cos.row(r) /= n;
  }
  return argmax_rows(cos);
}

std::vector<CategoryId> nearest_anchor_classify(const EncoderParams& params, const EmbeddingTable& table,
                                                const Scene& scene, const TrainConfig& cfg) {
  const SparseVoxelGrid grid = voxelize(scene, cfg.resolution);
  const Eigen::MatrixXd feats = encode(params, point_features(grid, scene, cfg.use_color));
  return devoxelize(grid, nearest_anchor_labels(feats, table.rows));
}

}  // namespace lgseg
