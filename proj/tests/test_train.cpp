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

#include <doctest.h>

#include "lgseg/error.hpp"
#include "lgseg/synthetic.hpp"
#include "lgseg/train.hpp"

using namespace lgseg;

namespace {

// Three flat patches with distinct colors and heights, one category each.
Scene three_patches(Rng& rng) {
  Scene s;
  const Color colors[3] = {{200, 40, 40}, {40, 200, 40}, {40, 40, 200}};
  for (CategoryId c = 0; c < 3; ++c) {
    for (int k = 0; k < 400; ++k) {
      PointRecord p;
      p.position = {static_cast<float>(c * 1.5 + rng.uniform(0.0, 1.0)), static_cast<float>(rng.uniform(0.0, 1.0)),
                    static_cast<float>(0.4 * c)};
      p.color = colors[c];
      p.semantic = c;
      p.instance = c;
      s.points.push_back(p);
    }
  }
  return s;
}

LabelCatalog three_catalog() {
  std::vector<CategoryRecord> records;
  for (CategoryId c = 0; c < 3; ++c) records.push_back({c, "class " + std::to_string(c), 10u + c, 1000u});
  return LabelCatalog(records);
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch = 2;
  cfg.resolution = 0.1;
  cfg.cells_per_scene = 64;
  cfg.shape.hidden = 16;
  cfg.shape.output = 8;
  cfg.loss = ClassLoss::ce;
  return cfg;
}

struct Corpus {
  LabelCatalog catalog;
  std::vector<Scene> scenes;
};

Corpus synthetic_corpus() {
  SyntheticSpec spec;
  spec.n_categories = 8;
  spec.density = 150.0;
  Corpus c;
  c.catalog = synthetic_catalog(spec.n_categories);
  for (std::uint64_t i = 0; i < 4; ++i) c.scenes.push_back(generate_synthetic_scene(spec, c.catalog, i));
  c.catalog = with_counts(c.catalog, scene_stats(c.scenes, c.catalog.size()));
  return c;
}

}  // namespace

TEST_CASE("step schedule") {
  TrainConfig cfg;
  cfg.lr = 0.05;
  cfg.decay = 0.3;
  cfg.milestones = {150, 250};
  CHECK(lr_at(cfg, 0) == 0.05);
  CHECK(lr_at(cfg, 149) == 0.05);
  CHECK(lr_at(cfg, 150) == 0.05 * 0.3);
  CHECK(lr_at(cfg, 249) == doctest::Approx(0.015).epsilon(1e-12));
  CHECK(lr_at(cfg, 250) == doctest::Approx(0.0045).epsilon(1e-12));
  CHECK(lr_at(cfg, 10000) == doctest::Approx(0.0045).epsilon(1e-12));
  cfg.milestones.clear();
  CHECK(lr_at(cfg, 0) == lr_at(cfg, 999));
  CHECK(default_milestones(200) == std::vector<std::size_t>{110, 170});
  CHECK(default_milestones(40) == std::vector<std::size_t>{22, 34});
}

TEST_CASE("loss names round trip") {
  for (auto l : {ClassLoss::ce, ClassLoss::weighted_ce, ClassLoss::focal, ClassLoss::cfocal})
    CHECK(parse_class_loss(to_string(l)) == l);
  for (auto o : {PretrainObjective::anchor, PretrainObjective::supcon})
    CHECK(parse_pretrain_objective(to_string(o)) == o);
  CHECK_THROWS_AS(parse_class_loss("hinge"), UsageError);
}

TEST_CASE("class weights") {
  const LabelCatalog cat = three_catalog();
  TrainConfig cfg;
  cfg.loss = ClassLoss::ce;
  CHECK(class_weights(cat, cfg).empty());
  cfg.loss = ClassLoss::cfocal;
  const auto w = class_weights(cat, cfg);
  REQUIRE(w.size() == 3);
  const auto alpha = alpha_weights(cat);
  for (std::size_t i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(3.0 * alpha[i]).epsilon(1e-12));
  cfg.scale_alpha = false;
  const auto raw = class_weights(cat, cfg);
  for (std::size_t i = 0; i < 3; ++i) CHECK(raw[i] == doctest::Approx(alpha[i]).epsilon(1e-12));
}

TEST_CASE("finetune separates three colored patches") {
  Rng rng(1);
  std::vector<Scene> scenes;
  for (int i = 0; i < 4; ++i) scenes.push_back(three_patches(rng));
  TrainConfig cfg = small_config();
  cfg.epochs = 40;
  cfg.milestones = default_milestones(cfg.epochs);
  const Model model = finetune(initial_encoder(cfg), scenes, three_catalog(), {}, cfg);
  const Scene test = three_patches(rng);
  const auto pred = predict(model, test, cfg);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == test.points[i].semantic;
  CHECK(static_cast<double>(correct) / static_cast<double>(pred.size()) > 0.95);
}

TEST_CASE("finetune is deterministic and independent of workers") {
  const Corpus c = synthetic_corpus();
  TrainConfig cfg = small_config();
  cfg.seed = 3;
  cfg.augment = true;
  cfg.augment_cfg.structural_ids = {kFloorId, kWallId};
  cfg.augment_cfg.n_samples = 2;
  TrainLog a_log, b_log;
  const Model a = finetune(initial_encoder(cfg), c.scenes, c.catalog, {}, cfg, &a_log);
  cfg.workers = 2;
  const Model b = finetune(initial_encoder(cfg), c.scenes, c.catalog, {}, cfg, &b_log);
  CHECK(a.encoder == b.encoder);
  CHECK(a.head == b.head);
  CHECK(a_log.epoch_loss == b_log.epoch_loss);
  CHECK(a_log.steps == cfg.epochs * 2);

  cfg.seed = 4;
  const Model other = finetune(initial_encoder(cfg), c.scenes, c.catalog, {}, cfg);
  CHECK_FALSE(other.head == a.head);
}

TEST_CASE("unlabeled masks give no steps") {
  const Corpus c = synthetic_corpus();
  TrainConfig cfg = small_config();
  std::vector<std::vector<bool>> masks;
  for (const auto& s : c.scenes) masks.emplace_back(s.points.size(), false);
  TrainLog log;
  const EncoderParams init = initial_encoder(cfg);
  const Model m = finetune(init, c.scenes, c.catalog, masks, cfg, &log);
  CHECK(log.steps == 0);
  CHECK(m.encoder == init);
  masks.pop_back();
  CHECK_THROWS_AS(finetune(init, c.scenes, c.catalog, masks, cfg), DimensionError);
}

TEST_CASE("pretrain pulls features toward anchors") {
  const Corpus c = synthetic_corpus();
  TrainConfig cfg = small_config();
  cfg.epochs = 15;
  const EmbeddingTable table = synthetic_anchors(c.catalog.size(), 8, 11);
  TrainLog log;
  const EncoderParams a = pretrain(c.scenes, c.catalog, table, cfg, &log);
  CHECK(a.output_dim() == 8);
  REQUIRE(log.epoch_loss.size() == cfg.epochs);
  CHECK(log.epoch_loss.back() < log.epoch_loss.front());
  CHECK(pretrain(c.scenes, c.catalog, table, cfg) == a);

  const EmbeddingTable wrong = synthetic_anchors(c.catalog.size() - 1, 8, 11);
  CHECK_THROWS_AS(pretrain(c.scenes, c.catalog, wrong, cfg), DimensionError);
}

TEST_CASE("nearest anchor") {
  Eigen::MatrixXd anchors(3, 2);
  anchors << 1, 0, 0, 2, 0, 1;
  Eigen::MatrixXd f(3, 2);
  f << 3, 0.1, 0.1, 5, 1, 1;
  // The last row ties every anchor; the lowest id wins.
  CHECK(nearest_anchor_labels(f, anchors) == std::vector<CategoryId>{0, 1, 0});
  CHECK_THROWS_AS(nearest_anchor_labels(Eigen::MatrixXd::Ones(2, 3), anchors), DimensionError);
  anchors.row(0).setZero();
  CHECK_THROWS_AS(nearest_anchor_labels(f, anchors), DegenerateEmbeddingError);
}
