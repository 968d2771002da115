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

#include "lgseg/geometry.hpp"

namespace lgseg {

double Aabb::volume() const {
  if (empty()) return 0.0;
  const auto e = extent();
  return e.x * e.y * e.z;
}

double intersection_volume(const Aabb& a, const Aabb& b) {
  const double dx = std::min(a.max.x, b.max.x) - std::max(a.min.x, b.min.x);
  const double dy = std::min(a.max.y, b.max.y) - std::max(a.min.y, b.min.y);
  const double dz = std::min(a.max.z, b.max.z) - std::max(a.min.z, b.min.z);
  if (dx <= 0.0 || dy <= 0.0 || dz <= 0.0) return 0.0;
  return dx * dy * dz;
}

}  // namespace lgseg
