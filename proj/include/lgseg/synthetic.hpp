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
#include <vector>

#include "lgseg/catalog.hpp"
#include "lgseg/geometry.hpp"
#include "lgseg/scene.hpp"

namespace lgseg {

enum class Primitive { box, cylinder, sphere };

// Parameters of the synthetic long-tail room generator. Category 0 is the
// floor, category 1 the walls; object category c >= 2 has Zipf rank c - 2.
struct SyntheticSpec {
  std::size_t n_categories = 20;
  double zipf_exponent = 1.0;
  double room_extent = 6.0;      // meters, square room
  double wall_height = 2.0;      // meters
  double density = 2000.0;       // surface points per square meter
  double color_noise = 20.0;     // per-channel sigma on the 0-255 scale
  std::vector<Primitive> primitives{Primitive::box, Primitive::cylinder, Primitive::sphere};
  double objects_per_scene = 12.0;  // expected object instances per room
  std::size_t placement_attempts = 50;
  std::uint64_t appearance_seed = 0;

  void validate() const;
};

inline constexpr CategoryId kFloorId = 0;
inline constexpr CategoryId kWallId = 1;

// Fixed per-category look, shared by every scene generated from one spec.
struct CategoryAppearance {
  Primitive primitive = Primitive::box;
  Vec3 size;  // box: x,y,z extents; cylinder: radius, -, height; sphere: radius
  Color base_color{};
};
// Well-separated base color of a category.
Color palette_color(CategoryId id);
CategoryAppearance category_appearance(const SyntheticSpec& spec, CategoryId id);

// Catalog with floor, wall and n - 2 indoor object names; counts are zero.
LabelCatalog synthetic_catalog(std::size_t n_categories);

// Per-category Zipf weight of the expected instance count (objects only; 0
// for floor and wall).
std::vector<double> zipf_instance_rates(const SyntheticSpec& spec);

struct SyntheticScene {
  Scene scene;
  std::vector<CategoryCounts> emitted;  // what the generator actually placed
};

SyntheticScene generate_synthetic_scene_logged(const SyntheticSpec& spec, const LabelCatalog& catalog,
                                               std::uint64_t seed);
Scene generate_synthetic_scene(const SyntheticSpec& spec, const LabelCatalog& catalog, std::uint64_t seed);

}  // namespace lgseg
