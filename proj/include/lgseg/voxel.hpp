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
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lgseg/scene.hpp"

namespace lgseg {

inline constexpr double kDefaultResolution = 0.02;

struct CellKey {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;

  auto operator<=>(const CellKey&) const = default;
};

struct CellAggregate {
  std::array<double, 3> mean_color{};
  // Most frequent labeled category among member points (ties: lowest id);
  // kUnlabeled only when every member is unlabeled.
  CategoryId majority = kUnlabeled;

  bool operator==(const CellAggregate&) const = default;
};

// Most frequent labeled id (ties: lowest id), kUnlabeled when none is
// labeled. Sorts `labels`.
CategoryId majority_label(std::vector<CategoryId>& labels);

// Integer cell of one coordinate: floor(coord / resolution), evaluated on the
// f32 coordinate and the f32-rounded resolution so that points stored exactly
// on a boundary land in the upper cell.
std::int64_t cell_index(float coord, double resolution);
CellKey cell_key(const std::array<float, 3>& position, double resolution);

// Sparse occupied-cell map, cells sorted by key. Member point indices are
// stored contiguously per cell.
class SparseVoxelGrid {
 public:
  double resolution() const { return resolution_; }
  std::size_t size() const { return keys_.size(); }
  std::size_t point_count() const { return point_indices_.size(); }

  const std::vector<CellKey>& keys() const { return keys_; }
  const std::vector<CellAggregate>& aggregates() const { return aggregates_; }
  std::span<const std::uint32_t> points_of(std::size_t cell) const;
  std::optional<std::size_t> find(const CellKey& key) const;
  // Cell center in meters.
  std::array<double, 3> center(std::size_t cell) const;

  bool operator==(const SparseVoxelGrid&) const = default;

 private:
  friend SparseVoxelGrid voxelize(const Scene& scene, double resolution);

  double resolution_ = kDefaultResolution;
  std::vector<CellKey> keys_;
  std::vector<CellAggregate> aggregates_;
  std::vector<std::uint32_t> offsets_;  // size() + 1 entries
  std::vector<std::uint32_t> point_indices_;
};

// Throws SceneInvariantError on non-finite coordinates, DimensionError when a
// coordinate falls outside the 21-bit cell range.
SparseVoxelGrid voxelize(const Scene& scene, double resolution = kDefaultResolution);

// Per-point labels from per-cell labels. Throws DimensionError when the label
// count differs from the cell count.
std::vector<CategoryId> devoxelize(const SparseVoxelGrid& grid, std::span<const CategoryId> cell_labels);

}  // namespace lgseg
