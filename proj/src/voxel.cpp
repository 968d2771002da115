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

#include "lgseg/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "lgseg/error.hpp"

namespace lgseg {
namespace {

constexpr std::int64_t kBias = 1 << 20;
constexpr std::int64_t kLimit = (1 << 20) - 1;

std::uint64_t pack(const CellKey& k) {
  return (static_cast<std::uint64_t>(k.x + kBias) << 42) | (static_cast<std::uint64_t>(k.y + kBias) << 21) |
         static_cast<std::uint64_t>(k.z + kBias);
}

}  // namespace

CategoryId majority_label(std::vector<CategoryId>& labels) {
  std::sort(labels.begin(), labels.end());
  CategoryId best = kUnlabeled;
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < labels.size();) {
    std::size_t j = i;
    while (j < labels.size() && labels[j] == labels[i]) ++j;
    // Sorted ascending, so the first label reaching a count wins ties.
    if (labels[i] != kUnlabeled && j - i > best_count) {
      best = labels[i];
      best_count = j - i;
    }
    i = j;
  }
  return best;
}

namespace {

// Aggregate of member points given in ascending index order.
CellAggregate aggregate_of(const Scene& scene, std::span<const std::uint32_t> members, std::vector<CategoryId>& labels) {
  CellAggregate agg;
  labels.clear();
  for (auto i : members) {
    const auto& p = scene.points[i];
    for (int c = 0; c < 3; ++c) agg.mean_color[c] += p.color[c];
    labels.push_back(p.semantic);
  }
  for (auto& c : agg.mean_color) c /= static_cast<double>(members.size());
  agg.majority = majority_label(labels);
  return agg;
}

}  // namespace

std::int64_t cell_index(float coord, double resolution) {
  const double res = static_cast<double>(static_cast<float>(resolution));
  return static_cast<std::int64_t>(std::floor(static_cast<double>(coord) / res));
}

CellKey cell_key(const std::array<float, 3>& position, double resolution) {
  std::int64_t c[3];
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(position[a])) throw SceneInvariantError("non-finite coordinate during voxelization");
    c[a] = cell_index(position[a], resolution);
    if (c[a] < -kLimit || c[a] > kLimit) {
      throw DimensionError("coordinate " + std::to_string(position[a]) + " outside the voxel index range");
    }
  }
  return {static_cast<std::int32_t>(c[0]), static_cast<std::int32_t>(c[1]), static_cast<std::int32_t>(c[2])};
}

std::span<const std::uint32_t> SparseVoxelGrid::points_of(std::size_t cell) const {
  return std::span<const std::uint32_t>(point_indices_).subspan(offsets_[cell], offsets_[cell + 1] - offsets_[cell]);
}

std::optional<std::size_t> SparseVoxelGrid::find(const CellKey& key) const {
  auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - keys_.begin());
}

std::array<double, 3> SparseVoxelGrid::center(std::size_t cell) const {
  const auto& k = keys_[cell];
  return {(k.x + 0.5) * resolution_, (k.y + 0.5) * resolution_, (k.z + 0.5) * resolution_};
}

SparseVoxelGrid voxelize(const Scene& scene, double resolution) {
  if (!(resolution > 0.0)) throw UsageError("voxel resolution must be positive");
  if (scene.points.size() > 0xFFFFFFFFu) throw DimensionError("scene too large to voxelize");
  std::vector<std::pair<std::uint64_t, std::uint32_t>> order(scene.points.size());
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    order[i] = {pack(cell_key(scene.points[i].position, resolution)), static_cast<std::uint32_t>(i)};
  }
  std::sort(order.begin(), order.end());

  SparseVoxelGrid grid;
  grid.resolution_ = resolution;
  grid.point_indices_.reserve(order.size());
  grid.offsets_.push_back(0);
  std::vector<CategoryId> labels;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && order[j].first == order[i].first) ++j;
    const std::size_t first = grid.point_indices_.size();
    for (std::size_t k = i; k < j; ++k) grid.point_indices_.push_back(order[k].second);
    grid.keys_.push_back(cell_key(scene.points[order[i].second].position, resolution));
    grid.aggregates_.push_back(
        aggregate_of(scene, std::span<const std::uint32_t>(grid.point_indices_).subspan(first), labels));
    grid.offsets_.push_back(static_cast<std::uint32_t>(grid.point_indices_.size()));
    i = j;
  }
  return grid;
}

std::vector<CategoryId> devoxelize(const SparseVoxelGrid& grid, std::span<const CategoryId> cell_labels) {
  if (cell_labels.size() != grid.size()) {
    throw DimensionError("devoxelize: " + std::to_string(cell_labels.size()) + " labels for " +
                         std::to_string(grid.size()) + " cells");
  }
  std::vector<CategoryId> out(grid.point_count(), kUnlabeled);
  for (std::size_t c = 0; c < grid.size(); ++c) {
    for (auto i : grid.points_of(c)) out[i] = cell_labels[c];
  }
  return out;
}

}  // namespace lgseg
