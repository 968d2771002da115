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

#include "lgseg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "lgseg/error.hpp"

namespace lgseg {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

std::uint64_t pack_cell(std::int64_t x, std::int64_t y, std::int64_t z) {
  constexpr std::int64_t kBias = 1 << 20;
  return (static_cast<std::uint64_t>(x + kBias) << 42) | (static_cast<std::uint64_t>(y + kBias) << 21) |
         static_cast<std::uint64_t>(z + kBias);
}

bool contains(std::span<const CategoryId> ids, CategoryId id) {
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

}  // namespace

BankEntry make_bank_entry(CategoryId category, std::span<const Vec3> world_points, std::span<const Color> colors) {
  if (world_points.size() != colors.size()) throw DimensionError("bank entry: points/colors length mismatch");
  BankEntry e;
  e.category = category;
  e.colors.assign(colors.begin(), colors.end());
  if (world_points.empty()) return e;
  double cx = 0.0;
  double cy = 0.0;
  double min_z = world_points[0].z;
  for (const auto& p : world_points) {
    cx += p.x;
    cy += p.y;
    min_z = std::min(min_z, p.z);
  }
  cx /= static_cast<double>(world_points.size());
  cy /= static_cast<double>(world_points.size());
  e.points.reserve(world_points.size());
  for (const auto& p : world_points) {
    e.points.push_back({p.x - cx, p.y - cy, p.z - min_z});
    e.local_bounds.expand(e.points.back());
  }
  return e;
}

std::vector<CategoryId> InstanceBank::categories() const {
  std::vector<CategoryId> out;
  for (const auto& [cat, idx] : by_category) {
    if (!idx.empty()) out.push_back(cat);
  }
  return out;
}

void InstanceBank::add(BankEntry entry) {
  by_category[entry.category].push_back(entries.size());
  entries.push_back(std::move(entry));
}

std::vector<std::vector<std::size_t>> cluster_unassigned_points(const Scene& scene,
                                                                std::span<const CategoryId> ids,
                                                                double link_radius) {
  if (!(link_radius > 0.0)) throw UsageError("link radius must be positive");
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const auto& p = scene.points[i];
    if (p.instance == kNoInstance && p.semantic != kUnlabeled && contains(ids, p.semantic)) members.push_back(i);
  }
  DisjointSets sets(members.size());
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
  auto cell = [&](double v) { return static_cast<std::int64_t>(std::floor(v / link_radius)); };
  for (std::size_t m = 0; m < members.size(); ++m) {
    const auto p = scene.points[members[m]].pos();
    buckets[pack_cell(cell(p.x), cell(p.y), cell(p.z))].push_back(m);
  }
  const double r2 = link_radius * link_radius;
  for (std::size_t m = 0; m < members.size(); ++m) {
    const auto& pm = scene.points[members[m]];
    const auto p = pm.pos();
    const auto cx = cell(p.x);
    const auto cy = cell(p.y);
    const auto cz = cell(p.z);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = buckets.find(pack_cell(cx + dx, cy + dy, cz + dz));
          if (it == buckets.end()) continue;
          for (std::size_t o : it->second) {
            if (o <= m) continue;
            const auto& po = scene.points[members[o]];
            if (po.semantic != pm.semantic) continue;
            const auto q = po.pos();
            const double d2 = (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) + (p.z - q.z) * (p.z - q.z);
            if (d2 <= r2) sets.unite(m, o);
          }
        }
      }
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t m = 0; m < members.size(); ++m) groups[sets.find(m)].push_back(members[m]);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(groups.size());
  for (auto& [root, idx] : groups) out.push_back(std::move(idx));
  return out;
}

InstanceBank extract_instances(std::span<const Scene> scenes, std::span<const CategoryId> ids, double link_radius) {
  InstanceBank bank;
  for (const auto& scene : scenes) {
    std::map<InstanceId, std::vector<std::size_t>> by_instance;
    for (std::size_t i = 0; i < scene.points.size(); ++i) {
      const auto& p = scene.points[i];
      if (p.instance != kNoInstance && contains(ids, p.semantic)) by_instance[p.instance].push_back(i);
    }
    auto add_group = [&](const std::vector<std::size_t>& idx) {
      std::vector<Vec3> pts;
      std::vector<Color> cols;
      pts.reserve(idx.size());
      cols.reserve(idx.size());
      for (auto i : idx) {
        pts.push_back(scene.points[i].pos());
        cols.push_back(scene.points[i].color);
      }
      bank.add(make_bank_entry(scene.points[idx.front()].semantic, pts, cols));
    };
    for (const auto& [inst, idx] : by_instance) add_group(idx);
    for (const auto& idx : cluster_unassigned_points(scene, ids, link_radius)) add_group(idx);
  }
  return bank;
}

HeightMap::HeightMap(double origin_x, double origin_y, double cell, std::size_t nx, std::size_t ny)
    : origin_x_(origin_x), origin_y_(origin_y), cell_(cell), nx_(nx), ny_(ny), grid_(nx * ny, 0.0) {
  if (!(cell > 0.0)) throw UsageError("height map cell size must be positive");
}

std::optional<std::array<std::size_t, 2>> HeightMap::cell_of(double x, double y) const {
  const double fi = std::floor((x - origin_x_) / cell_);
  const double fj = std::floor((y - origin_y_) / cell_);
  if (fi < 0.0 || fj < 0.0 || fi >= static_cast<double>(nx_) || fj >= static_cast<double>(ny_)) {
    return std::nullopt;
  }
  return std::array<std::size_t, 2>{static_cast<std::size_t>(fi), static_cast<std::size_t>(fj)};
}

std::optional<double> HeightMap::height_at(double x, double y) const {
  auto c = cell_of(x, y);
  if (!c) return std::nullopt;
  return at((*c)[0], (*c)[1]);
}

std::optional<double> HeightMap::max_over(double min_x, double min_y, double max_x, double max_y) const {
  auto lo = cell_of(min_x, min_y);
  auto hi = cell_of(max_x, max_y);
  if (!lo || !hi) return std::nullopt;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = (*lo)[0]; i <= (*hi)[0]; ++i) {
    for (std::size_t j = (*lo)[1]; j <= (*hi)[1]; ++j) best = std::max(best, at(i, j));
  }
  return best;
}

void HeightMap::raise(const Vec3& p) {
  auto c = cell_of(p.x, p.y);
  if (!c) return;
  auto& h = grid_[(*c)[0] * ny_ + (*c)[1]];
  h = std::max(h, p.z);
}

HeightMap build_height_map(const Scene& scene, double cell) {
  if (!(cell > 0.0)) throw UsageError("height map cell size must be positive");
  const auto box = bounds(scene);
  if (box.empty()) return HeightMap(0.0, 0.0, cell, 0, 0);
  const auto nx = static_cast<std::size_t>(std::floor((box.max.x - box.min.x) / cell)) + 1;
  const auto ny = static_cast<std::size_t>(std::floor((box.max.y - box.min.y) / cell)) + 1;
  HeightMap map(box.min.x, box.min.y, cell, nx, ny);
  for (const auto& p : scene.points) map.raise(p.pos());
  return map;
}

PlacedInstance place_entry(const BankEntry& entry, double x, double y, double z, double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  PlacedInstance out;
  out.positions.reserve(entry.points.size());
  for (const auto& p : entry.points) {
    const std::array<float, 3> w{static_cast<float>(c * p.x - s * p.y + x), static_cast<float>(s * p.x + c * p.y + y),
                                 static_cast<float>(p.z + z)};
    out.positions.push_back(w);
    out.bounds.expand({w[0], w[1], w[2]});
  }
  return out;
}

Placement propose_placement(const HeightMap& map, const BankEntry& entry, Rng& rng, double max_support_height) {
  Placement out;
  if (map.empty()) return out;
  out.x = map.origin_x() + rng.uniform() * map.extent_x();
  out.y = map.origin_y() + rng.uniform() * map.extent_y();
  out.yaw = rng.uniform() * 2.0 * std::numbers::pi;
  const auto footprint = place_entry(entry, out.x, out.y, 0.0, out.yaw).bounds;
  if (footprint.empty()) return out;
  const auto support = map.max_over(footprint.min.x, footprint.min.y, footprint.max.x, footprint.max.y);
  if (!support || *support > max_support_height) return out;
  out.z = *support;
  out.placeable = true;
  return out;
}

Collision check_collision(const Aabb& candidate, std::span<const Aabb> existing) {
  for (const auto& box : existing) {
    if (intersection_volume(candidate, box) > 0.0) return Collision::reject;
  }
  return Collision::accept;
}

void AugmentConfig::validate() const {
  if (max_attempts < n_samples) throw UsageError("augment: max_attempts must be >= n_samples");
  if (!(height_cell > 0.0)) throw UsageError("augment: height-map cell must be positive");
  if (jitter_sigma < 0.0) throw UsageError("augment: jitter sigma must be >= 0");
}

AugmentContext make_augment_context(const Scene& scene, const AugmentConfig& cfg) {
  AugmentContext ctx;
  ctx.height = build_height_map(scene, cfg.height_cell);
  std::vector<bool> structural(instance_count(scene), false);
  for (const auto& p : scene.points) {
    if (p.instance != kNoInstance && contains(cfg.structural_ids, p.semantic)) structural[p.instance] = true;
  }
  for (const auto& [inst, box] : instance_bounds(scene)) {
    if (!structural[inst]) ctx.obstacles.push_back(box);
  }
  ctx.next_instance = static_cast<InstanceId>(instance_count(scene));
  ctx.base_points = scene.points.size();
  return ctx;
}

std::vector<PointRecord> plan_insertions(AugmentContext ctx, const InstanceBank& bank, const LabelCatalog& catalog,
                                         const AugmentConfig& cfg, Rng& rng, AugmentLog* log) {
  cfg.validate();
  if (log) *log = AugmentLog{};
  std::vector<PointRecord> out;
  if (cfg.n_samples == 0) return out;
  const auto categories = bank.categories();
  if (categories.empty()) throw UsageError("augment: instance bank is empty");
  const auto weights = inverse_log_weights(catalog, categories);

  std::size_t inserted = 0;
  std::size_t attempts = 0;
  while (inserted < cfg.n_samples && attempts < cfg.max_attempts) {
    ++attempts;
    const CategoryId category = categories[rng.categorical(weights)];
    const auto& pool = bank.by_category.at(category);
    const auto& entry = bank.entries[pool[rng.below(pool.size())]];
    const auto candidate = propose_placement(ctx.height, entry, rng, cfg.max_support_height);
    if (!candidate.placeable) continue;
    auto placed = place_entry(entry, candidate.x, candidate.y, candidate.z, candidate.yaw);
    if (check_collision(placed.bounds, ctx.obstacles) == Collision::reject) continue;

    const std::size_t first = ctx.base_points + out.size();
    for (std::size_t i = 0; i < placed.positions.size(); ++i) {
      PointRecord p;
      p.position = placed.positions[i];
      p.color = entry.colors[i];
      p.semantic = category;
      p.instance = ctx.next_instance;
      out.push_back(p);
      ctx.height.raise(p.pos());
    }
    ctx.obstacles.push_back(placed.bounds);
    if (log) {
      log->insertions.push_back({ctx.next_instance, category, candidate.z, first, placed.positions.size()});
    }
    ++ctx.next_instance;
    ++inserted;
  }
  if (log) log->attempts = attempts;
  return out;
}

Scene augment_scene(const Scene& scene, const InstanceBank& bank, const LabelCatalog& catalog,
                    const AugmentConfig& cfg, Rng& rng, AugmentLog* log) {
  cfg.validate();
  if (log) *log = AugmentLog{};
  if (cfg.n_samples == 0) return scene;
  if (bank.empty()) throw UsageError("augment: instance bank is empty");
  const auto added = plan_insertions(make_augment_context(scene, cfg), bank, catalog, cfg, rng, log);
  Scene out;
  out.points.reserve(scene.points.size() + added.size());
  out.points = scene.points;
  out.points.insert(out.points.end(), added.begin(), added.end());
  return out;
}

Scene color_jitter(const Scene& scene, double sigma, Rng& rng) {
  if (sigma < 0.0) throw UsageError("color jitter sigma must be >= 0");
  Scene out = scene;
  if (sigma == 0.0) return out;
  for (auto& p : out.points) {
    for (auto& c : p.color) {
      const double v = std::round(static_cast<double>(c) + rng.normal(0.0, sigma));
      c = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return out;
}

}  // namespace lgseg
