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

// Small random inputs shared by the test files.
#pragma once

#include <filesystem>
#include <string>

#include "lgseg/rng.hpp"
#include "lgseg/scene.hpp"

namespace fixture {

// Valid scene: instances 0..k-1 each with a fixed category, plus unlabeled
// and labeled-without-instance points.
inline lgseg::Scene random_scene(lgseg::Rng& rng, std::size_t n_points, std::size_t n_instances,
                                 std::size_t n_categories) {
  lgseg::Scene s;
  std::vector<lgseg::CategoryId> inst_cat(n_instances);
  for (auto& c : inst_cat) c = static_cast<lgseg::CategoryId>(rng.below(n_categories));
  for (std::size_t i = 0; i < n_points; ++i) {
    lgseg::PointRecord p;
    for (auto& c : p.position) c = static_cast<float>(rng.uniform(-3.0, 3.0));
    for (auto& c : p.color) c = static_cast<std::uint8_t>(rng.below(256));
    const auto kind = rng.below(4);
    if (i < n_instances || (kind < 2 && n_instances > 0)) {
      p.instance = static_cast<lgseg::InstanceId>(i < n_instances ? i : rng.below(n_instances));
      p.semantic = inst_cat[p.instance];
    } else if (kind == 2) {
      p.semantic = static_cast<lgseg::CategoryId>(rng.below(n_categories));
    }
    s.points.push_back(p);
  }
  return s;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("lgseg_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture
