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
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "lgseg/binary_io.hpp"
#include "lgseg/catalog.hpp"
#include "lgseg/geometry.hpp"
#include "lgseg/types.hpp"

namespace lgseg {

using Color = std::array<std::uint8_t, 3>;

struct PointRecord {
  std::array<float, 3> position{};  // meters
  Color color{};
  CategoryId semantic = kUnlabeled;
  InstanceId instance = kNoInstance;

  Vec3 pos() const { return {position[0], position[1], position[2]}; }
  bool operator==(const PointRecord&) const = default;
};

// A scanned (or synthesized) scene: the unit of ingestion, augmentation,
// training and evaluation. Plain value type.
struct Scene {
  std::vector<PointRecord> points;

  std::size_t size() const { return points.size(); }
  bool operator==(const Scene&) const = default;
};

// Throws SceneInvariantError when coordinates are non-finite, an unlabeled
// point carries an instance, an instance spans several categories, or the
// used instance ids are not exactly 0..K-1.
void validate_scene(const Scene& scene);

Aabb bounds(const Scene& scene);

// World AABB per instance id (index = instance id); only labeled instances.
std::map<InstanceId, Aabb> instance_bounds(const Scene& scene);

// Number of distinct instance ids (K); ids are dense so this is max+1.
std::size_t instance_count(const Scene& scene);

// SC3D: "SC3D", u32 version=1, u32 count, then per point 3xf32 position,
// 3xu8 color, u16 semantic, u32 instance. Little-endian.
inline constexpr std::size_t kSceneHeaderBytes = 12;
inline constexpr std::size_t kScenePointBytes = 21;

Bytes encode_scene(const Scene& scene);
Scene decode_scene(std::span<const std::uint8_t> bytes);
std::size_t write_scene(const std::filesystem::path& path, const Scene& scene);
Scene read_scene(const std::filesystem::path& path);

// SPRD: "SPRD", u32 version=1, u32 count, then u16 semantic per point.
Bytes encode_predictions(std::span<const CategoryId> labels);
std::vector<CategoryId> decode_predictions(std::span<const std::uint8_t> bytes);
std::size_t write_predictions(const std::filesystem::path& path, std::span<const CategoryId> labels);
std::vector<CategoryId> read_predictions(const std::filesystem::path& path);

// Exact per-category (instance_count, point_count) by enumeration. Instances
// are counted as distinct (scene, instance id) pairs.
std::vector<CategoryCounts> scene_stats(std::span<const Scene> scenes, std::size_t n_categories);

// Copy with every point outside the mask set to unlabeled / no instance.
Scene apply_mask(const Scene& scene, const std::vector<bool>& labeled);

}  // namespace lgseg
