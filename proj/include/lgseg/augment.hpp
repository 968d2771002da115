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

#include <array>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "lgseg/catalog.hpp"
#include "lgseg/geometry.hpp"
#include "lgseg/rng.hpp"
#include "lgseg/scene.hpp"

namespace lgseg {

// One extracted object in its local frame: centroid at x = y = 0, lowest
// point at z = 0.
struct BankEntry {
  CategoryId category = kUnlabeled;
  std::vector<Vec3> points;
  std::vector<Color> colors;
  Aabb local_bounds;
};

// Re-centers world-space points into a BankEntry.
BankEntry make_bank_entry(CategoryId category, std::span<const Vec3> world_points, std::span<const Color> colors);

struct InstanceBank {
  std::vector<BankEntry> entries;
  std::map<CategoryId, std::vector<std::size_t>> by_category;

  bool empty() const { return entries.empty(); }
  std::vector<CategoryId> categories() const;
  void add(BankEntry entry);
};

inline constexpr double kDefaultLinkRadius = 0.05;

// One entry per (scene, instance) whose category is in `ids`. Labeled points
// without an instance id are grouped by single-linkage clustering within
// `link_radius` among points of the same category.
InstanceBank extract_instances(std::span<const Scene> scenes, std::span<const CategoryId> ids,
                               double link_radius = kDefaultLinkRadius);

// Single-linkage clusters (point index lists, ascending) of labeled points
// without instance ids, restricted to the given categories.
std::vector<std::vector<std::size_t>> cluster_unassigned_points(const Scene& scene,
                                                                std::span<const CategoryId> ids,
                                                                double link_radius);

// Max-z grid over the scene's xy extent; empty cells hold 0.
class HeightMap {
 public:
  HeightMap() = default;
  HeightMap(double origin_x, double origin_y, double cell, std::size_t nx, std::size_t ny);

  double cell_size() const { return cell_; }
  double origin_x() const { return origin_x_; }
  double origin_y() const { return origin_y_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  bool empty() const { return nx_ == 0 || ny_ == 0; }
  double extent_x() const { return cell_ * static_cast<double>(nx_); }
  double extent_y() const { return cell_ * static_cast<double>(ny_); }

  double at(std::size_t i, std::size_t j) const { return grid_[i * ny_ + j]; }
  std::optional<std::array<std::size_t, 2>> cell_of(double x, double y) const;
  // Height at (x, y); nullopt outside the map.
  std::optional<double> height_at(double x, double y) const;
  // Max height over the cells touched by an xy rectangle; nullopt when the
  // rectangle leaves the map.
  std::optional<double> max_over(double min_x, double min_y, double max_x, double max_y) const;

  // Raises the cell under p to p.z if higher; points outside are ignored.
  void raise(const Vec3& p);

 private:
  double origin_x_ = 0.0;
  double origin_y_ = 0.0;
  double cell_ = 1.0;
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<double> grid_;
};

HeightMap build_height_map(const Scene& scene, double cell);

struct Placement {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;
  // False when the footprint leaves the map or sits on a support higher than
  // the configured limit (walls and other tall structure).
  bool placeable = false;
};

inline constexpr double kDefaultMaxSupportHeight = 1.5;

// Entry points after yaw about +z and translation, rounded to the scene's
// float storage; bounds are computed on the rounded points.
struct PlacedInstance {
  std::vector<std::array<float, 3>> positions;
  Aabb bounds;
};
PlacedInstance place_entry(const BankEntry& entry, double x, double y, double z, double yaw);

// (x, y) uniform over the map, yaw uniform in [0, 2pi); z is the highest
// support under the rotated footprint so the entry's base rests on it.
Placement propose_placement(const HeightMap& map, const BankEntry& entry, Rng& rng,
                            double max_support_height = kDefaultMaxSupportHeight);

enum class Collision { accept, reject };

// Rejects iff the candidate overlaps any existing box with positive volume.
Collision check_collision(const Aabb& candidate, std::span<const Aabb> existing);

struct AugmentConfig {
  std::size_t n_samples = 4;
  std::size_t max_attempts = 40;
  double height_cell = 0.05;
  double jitter_sigma = 0.0;
  double max_support_height = kDefaultMaxSupportHeight;
  // Categories (floor, wall) whose instances act as support, not obstacles.
  std::vector<CategoryId> structural_ids;
  std::uint64_t seed = 0;

  void validate() const;
};

struct InsertionRecord {
  InstanceId instance = kNoInstance;
  CategoryId category = kUnlabeled;
  double support_z = 0.0;
  std::size_t first_point = 0;
  std::size_t point_count = 0;
};

struct AugmentLog {
  std::size_t attempts = 0;
  std::vector<InsertionRecord> insertions;
};

// Support heights and obstacle boxes of a scene, reusable across insertion
// rounds on that scene.
struct AugmentContext {
  HeightMap height;
  std::vector<Aabb> obstacles;
  InstanceId next_instance = 0;
  std::size_t base_points = 0;
};
AugmentContext make_augment_context(const Scene& scene, const AugmentConfig& cfg);

// The points augment_scene would append to the context's scene, in order.
std::vector<PointRecord> plan_insertions(AugmentContext ctx, const InstanceBank& bank, const LabelCatalog& catalog,
                                         const AugmentConfig& cfg, Rng& rng, AugmentLog* log = nullptr);

// Inserts up to cfg.n_samples bank instances (category drawn by inverse log
// frequency) at supported, collision-free poses. Existing points are never
// touched; inserted points are appended with fresh instance ids.
Scene augment_scene(const Scene& scene, const InstanceBank& bank, const LabelCatalog& catalog,
                    const AugmentConfig& cfg, Rng& rng, AugmentLog* log = nullptr);

// Adds Gaussian(0, sigma) to every color channel, rounding and clamping to [0, 255].
Scene color_jitter(const Scene& scene, double sigma, Rng& rng);

}  // namespace lgseg
