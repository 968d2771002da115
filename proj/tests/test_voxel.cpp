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

#include <map>

#include "fixtures.hpp"
#include "lgseg/error.hpp"
#include "lgseg/geometry.hpp"
#include "lgseg/voxel.hpp"

using namespace lgseg;

namespace {

Scene lattice(int n, double spacing, double offset) {
  Scene s;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < n; ++z) {
        PointRecord p;
        p.position = {static_cast<float>(offset + x * spacing), static_cast<float>(offset + y * spacing),
                      static_cast<float>(offset + z * spacing)};
        p.semantic = static_cast<CategoryId>((x + y + z) % 5);
        p.color = {static_cast<std::uint8_t>(x * 10), static_cast<std::uint8_t>(y * 10), 0};
        s.points.push_back(p);
      }
  return s;
}

}  // namespace

TEST_CASE("cell index uses the floor convention") {
  CHECK(cell_index(0.02f, 0.02) == 1);
  CHECK(cell_index(0.0f, 0.02) == 0);
  CHECK(cell_index(0.019f, 0.02) == 0);
  CHECK(cell_index(-0.001f, 0.02) == -1);
  CHECK(cell_index(-0.02f, 0.02) == -1);
  CHECK_THROWS_AS(cell_key({std::numeric_limits<float>::infinity(), 0.f, 0.f}, 0.02), SceneInvariantError);
  CHECK_THROWS_AS(cell_key({1e6f, 0.f, 0.f}, 0.02), DimensionError);
}

TEST_CASE("nearby points share a cell") {
  Scene s;
  s.points.push_back(PointRecord{{0.005f, 0.005f, 0.005f}, {}, 1, kNoInstance});
  s.points.push_back(PointRecord{{0.006f, 0.005f, 0.005f}, {}, 1, kNoInstance});
  CHECK(voxelize(s, 0.02).size() == 1);
}

TEST_CASE("lattice with one point per cell") {
  const Scene s = lattice(8, 0.02, 0.01);
  const SparseVoxelGrid g = voxelize(s, 0.02);
  CHECK(g.size() == s.points.size());
  std::vector<CategoryId> cell_labels(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) cell_labels[c] = g.aggregates()[c].majority;
  const auto back = devoxelize(g, cell_labels);
  for (std::size_t i = 0; i < s.points.size(); ++i) CHECK(back[i] == s.points[i].semantic);
}

TEST_CASE("voxelize matches a brute-force bin count") {
  Rng rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const Scene s = fixture::random_scene(rng, 3000, 10, 6);
    const double res = 0.1 + 0.2 * rng.uniform();
    std::map<CellKey, std::vector<std::size_t>> bins;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      const auto& p = s.points[i].position;
      const float r = static_cast<float>(res);
      CellKey k{static_cast<std::int32_t>(std::floor(double(p[0]) / double(r))),
                static_cast<std::int32_t>(std::floor(double(p[1]) / double(r))),
                static_cast<std::int32_t>(std::floor(double(p[2]) / double(r)))};
      bins[k].push_back(i);
    }
    const SparseVoxelGrid g = voxelize(s, res);
    REQUIRE(g.size() == bins.size());
    CHECK(g.point_count() == s.points.size());
    std::size_t c = 0;
    for (const auto& [key, members] : bins) {
      CHECK(g.keys()[c] == key);
      const auto got = g.points_of(c);
      CHECK(std::vector<std::size_t>(got.begin(), got.end()) == members);
      std::map<CategoryId, int> votes;
      std::array<double, 3> color{};
      for (auto i : members) {
        if (s.points[i].semantic != kUnlabeled) ++votes[s.points[i].semantic];
        for (int k = 0; k < 3; ++k) color[k] += s.points[i].color[k];
      }
      CategoryId best = kUnlabeled;
      int best_votes = 0;
      for (const auto& [id, v] : votes)
        if (v > best_votes) best = id, best_votes = v;
      CHECK(g.aggregates()[c].majority == best);
      for (int k = 0; k < 3; ++k) {
        CHECK(g.aggregates()[c].mean_color[k] == doctest::Approx(color[k] / members.size()).epsilon(1e-12));
      }
      CHECK(g.find(key) == c);
      ++c;
    }
    CHECK_FALSE(g.find(CellKey{100000, 0, 0}).has_value());
  }
}

TEST_CASE("majority ties resolve to the lowest id") {
  std::vector<CategoryId> v{7, 3, 7, 3, kUnlabeled, kUnlabeled, kUnlabeled};
  CHECK(majority_label(v) == 3);
  std::vector<CategoryId> none{kUnlabeled, kUnlabeled};
  CHECK(majority_label(none) == kUnlabeled);
}

TEST_CASE("devoxelize") {
  Scene s;
  for (int i = 0; i < 3; ++i) s.points.push_back(PointRecord{{0.001f * i, 0, 0}, {}, 2, kNoInstance});
  s.points.push_back(PointRecord{{0.5f, 0, 0}, {}, 3, kNoInstance});
  const SparseVoxelGrid g = voxelize(s, 0.02);
  REQUIRE(g.size() == 2);
  CHECK(devoxelize(g, std::vector<CategoryId>{4, 4}) == std::vector<CategoryId>(4, 4));
  CHECK(devoxelize(g, std::vector<CategoryId>{5, 6}) == std::vector<CategoryId>{5, 5, 5, 6});
  CHECK_THROWS_AS(devoxelize(g, std::vector<CategoryId>{1}), DimensionError);
}

TEST_CASE("box intersection volume") {
  Aabb a{{0, 0, 0}, {1, 1, 1}};
  Aabb b{{1, 0, 0}, {2, 1, 1}};
  Aabb c{{0.5, 0.5, 0.5}, {2, 2, 2}};
  CHECK(intersection_volume(a, a) == 1.0);
  CHECK(intersection_volume(a, b) == 0.0);
  CHECK(intersection_volume(a, c) == 0.125);
  CHECK(intersection_volume(a, Aabb{}) == 0.0);
}
