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

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "lgseg/augment.hpp"
#include "lgseg/error.hpp"
#include "lgseg/synthetic.hpp"
#include "lgseg/train.hpp"

using namespace lgseg;

namespace {

PointRecord point(double x, double y, double z, CategoryId c = kUnlabeled, InstanceId i = kNoInstance) {
  PointRecord p;
  p.position = {static_cast<float>(x), static_cast<float>(y), static_cast<float>(z)};
  p.color = {100, 150, 200};
  p.semantic = c;
  p.instance = i;
  return p;
}

// 4 m x 4 m floor at z = 0 with a 1 m table top at z = 0.5 over [1, 2]^2.
Scene floor_and_table() {
  Scene s;
  for (int i = 0; i <= 80; ++i)
    for (int j = 0; j <= 80; ++j) s.points.push_back(point(i * 0.05, j * 0.05, 0.0, 0, 0));
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j) s.points.push_back(point(1.0 + i * 0.05, 1.0 + j * 0.05, 0.5, 2, 1));
  return s;
}

BankEntry small_cube(CategoryId c) {
  std::vector<Vec3> pts;
  std::vector<Color> colors;
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j <= 4; ++j)
      for (int k = 0; k <= 4; ++k) {
        pts.push_back({5.0 + i * 0.05, -2.0 + j * 0.05, 3.0 + k * 0.05});
        colors.push_back({10, 20, 30});
      }
  return make_bank_entry(c, pts, colors);
}

struct World {
  SyntheticSpec spec;
  LabelCatalog catalog;
  std::vector<Scene> scenes;
  InstanceBank bank;
  AugmentConfig cfg;
};

World synthetic_world(std::size_t n_scenes) {
  World w;
  w.spec.density = 300.0;
  w.spec.n_categories = 10;
  w.catalog = synthetic_catalog(w.spec.n_categories);
  for (std::size_t i = 0; i < n_scenes; ++i) w.scenes.push_back(generate_synthetic_scene(w.spec, w.catalog, i));
  w.catalog = with_counts(w.catalog, scene_stats(w.scenes, w.catalog.size()));
  std::vector<CategoryId> objects;
  for (CategoryId c = 2; c < w.spec.n_categories; ++c) objects.push_back(c);
  w.bank = extract_instances(w.scenes, objects);
  w.cfg.structural_ids = {kFloorId, kWallId};
  return w;
}

}  // namespace

TEST_CASE("bank entries are centered with their base at zero") {
  const BankEntry e = small_cube(3);
  double cx = 0, cy = 0, mz = 1e9;
  for (const auto& p : e.points) {
    cx += p.x;
    cy += p.y;
    mz = std::min(mz, p.z);
  }
  CHECK(std::abs(cx / e.points.size()) < 1e-12);
  CHECK(std::abs(cy / e.points.size()) < 1e-12);
  CHECK(mz == 0.0);
  CHECK(e.local_bounds.min.z == 0.0);
  CHECK(e.local_bounds.max.z == doctest::Approx(0.2));
  CHECK(e.colors.size() == e.points.size());
}

TEST_CASE("instance extraction") {
  const World w = synthetic_world(3);
  std::size_t expected = 0;
  for (const auto& s : w.scenes) {
    std::vector<bool> seen(1024, false);
    for (const auto& p : s.points)
      if (p.instance != kNoInstance && p.semantic >= 2 && !seen[p.instance]) {
        seen[p.instance] = true;
        ++expected;
      }
  }
  CHECK(w.bank.entries.size() == expected);
  for (const auto& [c, pool] : w.bank.by_category)
    for (auto k : pool) CHECK(w.bank.entries[k].category == c);

  Scene loose;
  for (int i = 0; i < 5; ++i) loose.points.push_back(point(i * 0.03, 0, 0, 4));
  for (int i = 0; i < 5; ++i) loose.points.push_back(point(2 + i * 0.03, 0, 0, 4));
  loose.points.push_back(point(0.01, 0, 0, 5));
  const std::vector<CategoryId> ids{4};
  const auto clusters = cluster_unassigned_points(loose, ids, 0.05);
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0] == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(clusters[1] == std::vector<std::size_t>{5, 6, 7, 8, 9});
}

TEST_CASE("height map matches brute force") {
  Rng rng(1);
  Scene s = fixture::random_scene(rng, 3000, 4, 3);
  const HeightMap map = build_height_map(s, 0.3);
  for (std::size_t i = 0; i < map.nx(); ++i)
    for (std::size_t j = 0; j < map.ny(); ++j) CHECK(map.at(i, j) == oracle::height_cell(s, map, i, j));
}

TEST_CASE("placement on floor and table") {
  const Scene s = floor_and_table();
  const HeightMap map = build_height_map(s, 0.05);
  const BankEntry cube = small_cube(3);
  Rng rng(2);
  std::size_t on_table = 0, on_floor = 0;
  std::vector<double> yaws;
  for (int t = 0; t < 4000; ++t) {
    const Placement p = propose_placement(map, cube, rng);
    yaws.push_back(p.yaw);
    CHECK(p.yaw >= 0.0);
    CHECK(p.yaw < 2 * std::numbers::pi);
    if (!p.placeable) continue;
    const PlacedInstance placed = place_entry(cube, p.x, p.y, p.z, p.yaw);
    const bool inside = placed.bounds.min.x >= 1.0 && placed.bounds.max.x <= 2.0 && placed.bounds.min.y >= 1.0 &&
                        placed.bounds.max.y <= 2.0;
    const bool clear = placed.bounds.max.x < 1.0 - 0.05 || placed.bounds.min.x > 2.0 + 0.05 ||
                       placed.bounds.max.y < 1.0 - 0.05 || placed.bounds.min.y > 2.0 + 0.05;
    if (inside) {
      CHECK(p.z == doctest::Approx(0.5));
      ++on_table;
    }
    if (clear) {
      CHECK(p.z == 0.0);
      ++on_floor;
    }
    CHECK(placed.bounds.min.z == doctest::Approx(p.z).epsilon(1e-6));
  }
  CHECK(on_table > 0);
  CHECK(on_floor > 0);

  double mean = 0.0;
  for (double y : yaws) mean += y;
  mean /= static_cast<double>(yaws.size());
  const double sigma = 2 * std::numbers::pi / std::sqrt(12.0) / std::sqrt(static_cast<double>(yaws.size()));
  CHECK(std::abs(mean - std::numbers::pi) < 3 * sigma);

  // A support above the limit is refused.
  Rng again(3);
  for (int t = 0; t < 500; ++t) {
    const Placement p = propose_placement(map, cube, again, 0.25);
    if (p.placeable) CHECK(p.z <= 0.25);
  }
}

TEST_CASE("collision checks") {
  Aabb a;
  a.expand({0, 0, 0});
  a.expand({1, 1, 1});
  Aabb touching;
  touching.expand({1, 0, 0});
  touching.expand({2, 1, 1});
  Aabb far;
  far.expand({5, 5, 5});
  far.expand({6, 6, 6});
  Aabb inside;
  inside.expand({0.2, 0.2, 0.2});
  inside.expand({0.4, 0.4, 0.4});
  const std::vector<Aabb> existing{a};
  CHECK(check_collision(a, existing) == Collision::reject);
  CHECK(check_collision(inside, existing) == Collision::reject);
  CHECK(check_collision(touching, existing) == Collision::accept);
  CHECK(check_collision(far, existing) == Collision::accept);
  CHECK(check_collision(a, {}) == Collision::accept);
}

TEST_CASE("augment_scene properties") {
  const World w = synthetic_world(4);
  AugmentConfig cfg = w.cfg;
  cfg.n_samples = 6;
  cfg.max_attempts = 60;

  Rng r0(9);
  AugmentConfig none = cfg;
  none.n_samples = 0;
  CHECK(augment_scene(w.scenes[0], w.bank, w.catalog, none, r0) == w.scenes[0]);

  for (std::size_t s = 0; s < w.scenes.size(); ++s) {
    const Scene& base = w.scenes[s];
    Rng rng(100 + s);
    AugmentLog log;
    const Scene out = augment_scene(base, w.bank, w.catalog, cfg, rng, &log);
    validate_scene(out);
    REQUIRE(out.points.size() >= base.points.size());
    CHECK(std::equal(base.points.begin(), base.points.end(), out.points.begin()));
    CHECK(log.insertions.size() <= cfg.n_samples);
    CHECK(log.attempts <= cfg.max_attempts);

    const AugmentContext ctx = make_augment_context(base, cfg);
    std::vector<Aabb> boxes = ctx.obstacles;
    std::size_t appended = 0;
    for (const auto& ins : log.insertions) {
      Aabb box;
      double min_z = 1e9;
      for (std::size_t k = ins.first_point; k < ins.first_point + ins.point_count; ++k) {
        box.expand(out.points[k].pos());
        min_z = std::min(min_z, static_cast<double>(out.points[k].position[2]));
        CHECK(out.points[k].instance == ins.instance);
        CHECK(out.points[k].semantic == ins.category);
      }
      CHECK(std::abs(min_z - ins.support_z) < 1e-5);
      CHECK(ins.support_z <= cfg.max_support_height);
      boxes.push_back(box);
      appended += ins.point_count;
    }
    CHECK(appended == out.points.size() - base.points.size());
    CHECK(oracle::pairwise_overlap(boxes) <= oracle::pairwise_overlap(ctx.obstacles) + 1e-9);

    Rng same(100 + s);
    CHECK(augment_scene(base, w.bank, w.catalog, cfg, same) == out);
    Rng plan(100 + s);
    const auto added = plan_insertions(ctx, w.bank, w.catalog, cfg, plan);
    CHECK(std::equal(added.begin(), added.end(), out.points.begin() + static_cast<std::ptrdiff_t>(base.points.size())));
  }

  Rng r1(1);
  CHECK_THROWS_AS(augment_scene(w.scenes[0], InstanceBank{}, w.catalog, cfg, r1), UsageError);
  AugmentConfig bad = cfg;
  bad.max_attempts = 2;
  CHECK_THROWS_AS(augment_scene(w.scenes[0], w.bank, w.catalog, bad, r1), UsageError);
}

TEST_CASE("overlay matches re-voxelizing the augmented scene") {
  const World w = synthetic_world(3);
  TrainConfig tc;
  tc.resolution = 0.05;
  AugmentConfig cfg = w.cfg;
  cfg.n_samples = 8;
  cfg.max_attempts = 80;
  for (std::size_t s = 0; s < w.scenes.size(); ++s) {
    const Scene& base = w.scenes[s];
    const SparseVoxelGrid base_grid = voxelize(base, tc.resolution);
    const PreparedScene prepared = prepare_scene(base_grid, base, tc);
    Rng rng(7 + s);
    const auto added = plan_insertions(make_augment_context(base, cfg), w.bank, w.catalog, cfg, rng);
    REQUIRE(!added.empty());
    const PreparedOverlay overlay = prepare_overlay(base_grid, base, prepared, added, tc);

    Scene full = base;
    full.points.insert(full.points.end(), added.begin(), added.end());
    const SparseVoxelGrid grid = voxelize(full, tc.resolution);
    Scene only;
    only.points = added;
    const SparseVoxelGrid added_grid = voxelize(only, tc.resolution);
    REQUIRE(static_cast<std::size_t>(overlay.features.rows()) == added_grid.size());

    std::size_t replaced = 0;
    for (std::size_t r = 0; r < added_grid.size(); ++r) {
      const auto cell = grid.find(added_grid.keys()[r]);
      REQUIRE(cell);
      const CellAggregate& agg = grid.aggregates()[*cell];
      CHECK(overlay.labels[r] == agg.majority);
      double row[kFeatureDim];
      cell_features(prepared.frame, grid.center(*cell), agg.mean_color, tc.use_color, row);
      for (std::size_t f = 0; f < kFeatureDim; ++f)
        CHECK(overlay.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) ==
              doctest::Approx(row[f]).epsilon(1e-5));
      const auto base_cell = base_grid.find(added_grid.keys()[r]);
      if (base_cell) {
        ++replaced;
        const auto it = std::find(overlay.replaced.begin(), overlay.replaced.end(),
                                  std::pair<std::uint32_t, std::uint32_t>(*base_cell, r));
        CHECK(it != overlay.replaced.end());
      }
      const bool listed = std::find(overlay.labeled.begin(), overlay.labeled.end(), r) != overlay.labeled.end();
      const bool base_labeled = base_cell && base_grid.aggregates()[*base_cell].majority != kUnlabeled;
      CHECK(listed == (agg.majority != kUnlabeled && !base_labeled));
    }
    CHECK(overlay.replaced.size() == replaced);
    CHECK(std::is_sorted(overlay.replaced.begin(), overlay.replaced.end()));
  }
}

TEST_CASE("color jitter") {
  Rng rng(5);
  const Scene s = fixture::random_scene(rng, 20000, 3, 3);
  Rng r0(1);
  CHECK(color_jitter(s, 0.0, r0) == s);
  Rng r1(2);
  const Scene j = color_jitter(s, 6.0, r1);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    CHECK(j.points[i].position == s.points[i].position);
    CHECK(j.points[i].semantic == s.points[i].semantic);
    for (int c = 0; c < 3; ++c) {
      const int a = s.points[i].color[c];
      if (a < 30 || a > 225) continue;
      total += std::abs(static_cast<double>(j.points[i].color[c]) - a);
      ++n;
    }
  }
  // Rounding to integers adds 1/12 to the variance.
  const double expected = std::sqrt(36.0 + 1.0 / 12.0) * std::sqrt(2.0 / std::numbers::pi);
  CHECK(total / n == doctest::Approx(expected).epsilon(0.05));

  Scene white;
  white.points.push_back(point(0, 0, 0));
  white.points[0].color = {255, 255, 0};
  Rng r2(3);
  int top = 0, bottom = 0;
  for (int t = 0; t < 200; ++t) {
    const Scene out = color_jitter(white, 50.0, r2);
    top += out.points[0].color[0] == 255;
    bottom += out.points[0].color[2] == 0;
  }
  // Half of the draws would leave [0, 255] without clamping.
  CHECK(top > 70);
  CHECK(bottom > 70);
  CHECK_THROWS_AS(color_jitter(s, -1.0, r2), UsageError);
}
