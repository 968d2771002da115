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

#include "lgseg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "lgseg/augment.hpp"
#include "lgseg/error.hpp"
#include "lgseg/rng.hpp"

namespace lgseg {
namespace {

constexpr const char* kObjectNames[] = {
    "chair",   "table",     "cabinet", "bed",     "sofa",      "desk",        "bookshelf", "lamp",
    "monitor", "box",       "pillow",  "trash can", "plant",   "backpack",    "towel",     "bottle",
    "fire extinguisher", "dumbbell", "dish rack", "telephone", "guitar", "laundry basket", "toaster",
    "printer", "stool",    "mirror",  "radiator", "fan",     "suitcase",    "keyboard",
};

class SurfaceSampler {
 public:
  SurfaceSampler(double density, Rng& rng) : density_(density), rng_(rng) {}

  std::size_t count(double area) const {
    return static_cast<std::size_t>(std::llround(area * density_));
  }

  // Axis-aligned rectangle spanned by origin + u*a + v*b, u,v in [0,1).
  void rect(const Vec3& origin, const Vec3& a, const Vec3& b, double area, std::vector<Vec3>& out) {
    const auto n = count(area);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = rng_.uniform();
      const double v = rng_.uniform();
      out.push_back({origin.x + u * a.x + v * b.x, origin.y + u * a.y + v * b.y, origin.z + u * a.z + v * b.z});
    }
  }

  void box(const Vec3& s, std::vector<Vec3>& out) {
    const Vec3 o{-s.x / 2, -s.y / 2, 0.0};
    rect({o.x, o.y, s.z}, {s.x, 0, 0}, {0, s.y, 0}, s.x * s.y, out);            // top
    rect(o, {s.x, 0, 0}, {0, 0, s.z}, s.x * s.z, out);                          // -y
    rect({o.x, o.y + s.y, 0}, {s.x, 0, 0}, {0, 0, s.z}, s.x * s.z, out);        // +y
    rect(o, {0, s.y, 0}, {0, 0, s.z}, s.y * s.z, out);                          // -x
    rect({o.x + s.x, o.y, 0}, {0, s.y, 0}, {0, 0, s.z}, s.y * s.z, out);        // +x
  }

  void cylinder(double r, double h, std::vector<Vec3>& out) {
    const auto n_side = count(2.0 * std::numbers::pi * r * h);
    for (std::size_t i = 0; i < n_side; ++i) {
      const double t = rng_.uniform() * 2.0 * std::numbers::pi;
      out.push_back({r * std::cos(t), r * std::sin(t), rng_.uniform() * h});
    }
    const auto n_top = count(std::numbers::pi * r * r);
    for (std::size_t i = 0; i < n_top; ++i) {
      const double t = rng_.uniform() * 2.0 * std::numbers::pi;
      const double rr = r * std::sqrt(rng_.uniform());
      out.push_back({rr * std::cos(t), rr * std::sin(t), h});
    }
  }

  void sphere(double r, std::vector<Vec3>& out) {
    const auto n = count(4.0 * std::numbers::pi * r * r);
    for (std::size_t i = 0; i < n; ++i) {
      double x = 0, y = 0, z = 0, len = 0;
      do {
        x = rng_.normal(0, 1);
        y = rng_.normal(0, 1);
        z = rng_.normal(0, 1);
        len = std::sqrt(x * x + y * y + z * z);
      } while (len < 1e-12);
      out.push_back({r * x / len, r * y / len, r + r * z / len});
    }
  }

 private:
  double density_;
  Rng& rng_;
};

Color noisy(const Color& base, double sigma, Rng& rng) {
  Color c{};
  for (int k = 0; k < 3; ++k) {
    const double v = std::round(static_cast<double>(base[k]) + (sigma > 0 ? rng.normal(0.0, sigma) : 0.0));
    c[k] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return c;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_categories < 3) throw UsageError("synthetic spec: need floor, wall and at least one object category");
  if (!(zipf_exponent > 0.0)) throw UsageError("synthetic spec: zipf exponent must be positive");
  if (!(room_extent > 0.0)) throw UsageError("synthetic spec: room extent must be positive");
  if (!(wall_height > 0.0)) throw UsageError("synthetic spec: wall height must be positive");
  if (!(density > 0.0)) throw UsageError("synthetic spec: density must be positive");
  if (color_noise < 0.0 || color_noise > 255.0) throw UsageError("synthetic spec: color noise outside [0,255]");
  if (primitives.empty()) throw UsageError("synthetic spec: empty primitive set");
  if (objects_per_scene < 0.0) throw UsageError("synthetic spec: objects_per_scene must be >= 0");
}

// Hue steps by the golden ratio so consecutive ids land far apart on the
// color wheel; saturation and value alternate to separate hue neighbors.
Color palette_color(CategoryId id) {
  const double h = std::fmod(0.11 + 0.6180339887498949 * id, 1.0) * 6.0;
  const double s = id % 2 == 0 ? 0.85 : 0.55;
  const double v = id % 3 == 0 ? 0.95 : (id % 3 == 1 ? 0.75 : 0.55);
  const double c = v * s;
  const double x = c * (1.0 - std::fabs(std::fmod(h, 2.0) - 1.0));
  double rgb[3] = {0.0, 0.0, 0.0};
  switch (static_cast<int>(h)) {
    case 0: rgb[0] = c; rgb[1] = x; break;
    case 1: rgb[0] = x; rgb[1] = c; break;
    case 2: rgb[1] = c; rgb[2] = x; break;
    case 3: rgb[1] = x; rgb[2] = c; break;
    case 4: rgb[0] = x; rgb[2] = c; break;
    default: rgb[0] = c; rgb[2] = x; break;
  }
  Color out{};
  for (int k = 0; k < 3; ++k) out[k] = static_cast<std::uint8_t>(std::lround(255.0 * (rgb[k] + v - c)));
  return out;
}

CategoryAppearance category_appearance(const SyntheticSpec& spec, CategoryId id) {
  auto rng = Rng::substream(spec.appearance_seed, "appearance/" + std::to_string(id));
  CategoryAppearance a;
  a.primitive = spec.primitives[rng.below(spec.primitives.size())];
  a.base_color = palette_color(id);
  // Rarer categories are smaller, as rare indoor objects tend to be.
  const std::size_t n_obj = spec.n_categories - 2;
  const double rank = id >= 2 ? static_cast<double>(id - 2) : 0.0;
  const double shrink = n_obj > 1 ? 1.0 - 0.45 * rank / static_cast<double>(n_obj - 1) : 1.0;
  switch (a.primitive) {
    case Primitive::box:
      a.size = {rng.uniform(0.25, 0.8) * shrink, rng.uniform(0.25, 0.8) * shrink, rng.uniform(0.2, 1.0) * shrink};
      break;
    case Primitive::cylinder:
      a.size = {rng.uniform(0.12, 0.4) * shrink, 0.0, rng.uniform(0.2, 1.0) * shrink};
      break;
    case Primitive::sphere:
      a.size = {rng.uniform(0.12, 0.35) * shrink, 0.0, 0.0};
      break;
  }
  return a;
}

LabelCatalog synthetic_catalog(std::size_t n_categories) {
  std::vector<CategoryRecord> records;
  records.push_back({0, "floor", 0, 0});
  records.push_back({1, "wall", 0, 0});
  constexpr std::size_t kNamed = std::size(kObjectNames);
  for (std::size_t i = 2; i < n_categories; ++i) {
    const std::size_t k = i - 2;
    std::string name = k < kNamed ? kObjectNames[k] : "object " + std::to_string(k);
    records.push_back({static_cast<CategoryId>(i), std::move(name), 0, 0});
  }
  return LabelCatalog(std::move(records));
}

std::vector<double> zipf_instance_rates(const SyntheticSpec& spec) {
  std::vector<double> rates(spec.n_categories, 0.0);
  double total = 0.0;
  for (std::size_t c = 2; c < spec.n_categories; ++c) {
    rates[c] = 1.0 / std::pow(static_cast<double>(c - 1), spec.zipf_exponent);
    total += rates[c];
  }
  for (auto& r : rates) r = r / total * spec.objects_per_scene;
  return rates;
}

SyntheticScene generate_synthetic_scene_logged(const SyntheticSpec& spec, const LabelCatalog& catalog,
                                               std::uint64_t seed) {
  spec.validate();
  if (catalog.size() < spec.n_categories) {
    throw CatalogSizeError("synthetic spec needs " + std::to_string(spec.n_categories) + " categories, catalog has " +
                           std::to_string(catalog.size()));
  }
  auto rng = Rng::substream(seed, "synthetic/scene");
  SurfaceSampler sampler(spec.density, rng);
  SyntheticScene out;
  out.emitted.assign(spec.n_categories, CategoryCounts{});
  auto& points = out.scene.points;
  InstanceId next_instance = 0;

  auto emit = [&](const std::vector<Vec3>& pts, CategoryId cat, const Color& base) {
    for (const auto& p : pts) {
      PointRecord r;
      r.position = {static_cast<float>(p.x), static_cast<float>(p.y), static_cast<float>(p.z)};
      r.color = noisy(base, spec.color_noise, rng);
      r.semantic = cat;
      r.instance = next_instance;
      points.push_back(r);
    }
    out.emitted[cat].point_count += pts.size();
    ++out.emitted[cat].instance_count;
    ++next_instance;
  };

  const double e = spec.room_extent;
  const double h = spec.wall_height;
  {
    std::vector<Vec3> floor;
    sampler.rect({0, 0, 0}, {e, 0, 0}, {0, e, 0}, e * e, floor);
    emit(floor, kFloorId, category_appearance(spec, kFloorId).base_color);
  }
  const Color wall_color = category_appearance(spec, kWallId).base_color;
  const Vec3 wall_origins[4] = {{0, 0, 0}, {0, e, 0}, {0, 0, 0}, {e, 0, 0}};
  const Vec3 wall_dirs[4] = {{e, 0, 0}, {e, 0, 0}, {0, e, 0}, {0, e, 0}};
  for (int w = 0; w < 4; ++w) {
    std::vector<Vec3> wall;
    sampler.rect(wall_origins[w], wall_dirs[w], {0, 0, h}, e * h, wall);
    emit(wall, kWallId, wall_color);
  }

  auto height = build_height_map(out.scene, 0.05);
  std::vector<Aabb> obstacles;
  const auto rates = zipf_instance_rates(spec);
  for (std::size_t c = 2; c < spec.n_categories; ++c) {
    const auto cat = static_cast<CategoryId>(c);
    const auto look = category_appearance(spec, cat);
    std::poisson_distribution<int> count_dist(rates[c]);
    const int n = rates[c] > 0.0 ? count_dist(rng.engine()) : 0;
    for (int k = 0; k < n; ++k) {
      std::vector<Vec3> local;
      const double j0 = rng.uniform(0.85, 1.15);
      const double j1 = rng.uniform(0.85, 1.15);
      const double j2 = rng.uniform(0.85, 1.15);
      switch (look.primitive) {
        case Primitive::box:
          sampler.box({look.size.x * j0, look.size.y * j1, look.size.z * j2}, local);
          break;
        case Primitive::cylinder:
          sampler.cylinder(look.size.x * j0, look.size.z * j2, local);
          break;
        case Primitive::sphere:
          sampler.sphere(look.size.x * j0, local);
          break;
      }
      if (local.empty()) continue;
      std::vector<Color> colors(local.size(), look.base_color);
      const auto entry = make_bank_entry(cat, local, colors);
      for (std::size_t attempt = 0; attempt < spec.placement_attempts; ++attempt) {
        const auto candidate = propose_placement(height, entry, rng);
        if (!candidate.placeable) continue;
        const auto placed = place_entry(entry, candidate.x, candidate.y, candidate.z, candidate.yaw);
        if (check_collision(placed.bounds, obstacles) == Collision::reject) continue;
        std::vector<Vec3> world;
        world.reserve(placed.positions.size());
        for (const auto& p : placed.positions) world.push_back({p[0], p[1], p[2]});
        emit(world, cat, look.base_color);
        for (const auto& p : world) height.raise(p);
        obstacles.push_back(placed.bounds);
        break;
      }
    }
  }
  return out;
}

Scene generate_synthetic_scene(const SyntheticSpec& spec, const LabelCatalog& catalog, std::uint64_t seed) {
  return generate_synthetic_scene_logged(spec, catalog, seed).scene;
}

}  // namespace lgseg
