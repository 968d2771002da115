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

#include "lgseg/scene.hpp"

#include <cmath>
#include <string>

#include "lgseg/error.hpp"

namespace lgseg {
namespace {

constexpr std::uint32_t kSceneVersion = 1;
constexpr std::uint32_t kPredictionVersion = 1;

void expect_magic(ByteReader& in, std::string_view magic) {
  if (in.remaining() < magic.size()) throw FormatError("truncated header: missing magic");
  const auto got = in.raw(magic.size());
  if (got != magic) throw FormatError("bad magic: expected '" + std::string(magic) + "'");
}

}  // namespace

void validate_scene(const Scene& scene) {
  std::vector<CategoryId> instance_semantic;
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const auto& p = scene.points[i];
    for (float c : p.position) {
      if (!std::isfinite(c)) throw SceneInvariantError("non-finite coordinate at point " + std::to_string(i));
    }
    if (p.instance == kNoInstance) continue;
    if (p.semantic == kUnlabeled) {
      throw SceneInvariantError("point " + std::to_string(i) + " is unlabeled but has instance " +
                                std::to_string(p.instance));
    }
    if (p.instance >= scene.points.size()) {
      throw SceneInvariantError("instance id " + std::to_string(p.instance) + " is not dense");
    }
    if (p.instance >= instance_semantic.size()) instance_semantic.resize(p.instance + 1, kUnlabeled);
    auto& sem = instance_semantic[p.instance];
    if (sem == kUnlabeled) {
      sem = p.semantic;
    } else if (sem != p.semantic) {
      throw SceneInvariantError("instance " + std::to_string(p.instance) + " spans categories " +
                                std::to_string(sem) + " and " + std::to_string(p.semantic));
    }
  }
  for (std::size_t k = 0; k < instance_semantic.size(); ++k) {
    if (instance_semantic[k] == kUnlabeled) {
      throw SceneInvariantError("instance ids are not dense: id " + std::to_string(k) + " is unused");
    }
  }
}

Aabb bounds(const Scene& scene) {
  Aabb box;
  for (const auto& p : scene.points) box.expand(p.pos());
  return box;
}

std::map<InstanceId, Aabb> instance_bounds(const Scene& scene) {
  std::map<InstanceId, Aabb> out;
  for (const auto& p : scene.points) {
    if (p.instance != kNoInstance) out[p.instance].expand(p.pos());
  }
  return out;
}

std::size_t instance_count(const Scene& scene) {
  std::size_t k = 0;
  for (const auto& p : scene.points) {
    if (p.instance != kNoInstance) k = std::max<std::size_t>(k, std::size_t{p.instance} + 1);
  }
  return k;
}

Bytes encode_scene(const Scene& scene) {
  if (scene.points.size() > 0xFFFFFFFFu) throw FormatError("scene too large for SC3D");
  ByteWriter out;
  out.raw("SC3D");
  out.u32(kSceneVersion);
  out.u32(static_cast<std::uint32_t>(scene.points.size()));
  for (const auto& p : scene.points) {
    for (float c : p.position) out.f32(c);
    for (auto c : p.color) out.u8(c);
    out.u16(p.semantic);
    out.u32(p.instance);
  }
  return out.take();
}

Scene decode_scene(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  expect_magic(in, "SC3D");
  const auto version = in.u32();
  if (version != kSceneVersion) throw FormatError("unsupported SC3D version " + std::to_string(version));
  const auto count = in.u32();
  if (in.remaining() != std::size_t{count} * kScenePointBytes) {
    throw FormatError("SC3D payload holds " + std::to_string(in.remaining()) + " bytes, expected " +
                      std::to_string(std::size_t{count} * kScenePointBytes));
  }
  Scene scene;
  scene.points.resize(count);
  for (auto& p : scene.points) {
    for (auto& c : p.position) c = in.f32();
    for (auto& c : p.color) c = in.u8();
    p.semantic = in.u16();
    p.instance = in.u32();
  }
  validate_scene(scene);
  return scene;
}

std::size_t write_scene(const std::filesystem::path& path, const Scene& scene) {
  return write_file(path, encode_scene(scene));
}

Scene read_scene(const std::filesystem::path& path) { return decode_scene(read_file(path)); }

Bytes encode_predictions(std::span<const CategoryId> labels) {
  ByteWriter out;
  out.raw("SPRD");
  out.u32(kPredictionVersion);
  out.u32(static_cast<std::uint32_t>(labels.size()));
  for (auto l : labels) out.u16(l);
  return out.take();
}

std::vector<CategoryId> decode_predictions(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  expect_magic(in, "SPRD");
  const auto version = in.u32();
  if (version != kPredictionVersion) throw FormatError("unsupported SPRD version " + std::to_string(version));
  const auto count = in.u32();
  if (in.remaining() != std::size_t{count} * 2) throw FormatError("SPRD payload size mismatch");
  std::vector<CategoryId> labels(count);
  for (auto& l : labels) l = in.u16();
  return labels;
}

std::size_t write_predictions(const std::filesystem::path& path, std::span<const CategoryId> labels) {
  return write_file(path, encode_predictions(labels));
}

std::vector<CategoryId> read_predictions(const std::filesystem::path& path) {
  return decode_predictions(read_file(path));
}

std::vector<CategoryCounts> scene_stats(std::span<const Scene> scenes, std::size_t n_categories) {
  std::vector<CategoryCounts> stats(n_categories);
  for (const auto& scene : scenes) {
    std::vector<bool> seen(instance_count(scene), false);
    for (const auto& p : scene.points) {
      if (p.semantic == kUnlabeled) continue;
      if (p.semantic >= n_categories) {
        throw DimensionError("semantic id " + std::to_string(p.semantic) + " outside catalog of " +
                             std::to_string(n_categories));
      }
      ++stats[p.semantic].point_count;
      if (p.instance != kNoInstance && !seen[p.instance]) {
        seen[p.instance] = true;
        ++stats[p.semantic].instance_count;
      }
    }
  }
  return stats;
}

Scene apply_mask(const Scene& scene, const std::vector<bool>& labeled) {
  if (labeled.size() != scene.points.size()) {
    throw DimensionError("annotation mask length " + std::to_string(labeled.size()) + " != point count " +
                         std::to_string(scene.points.size()));
  }
  Scene out = scene;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (!labeled[i]) {
      out.points[i].semantic = kUnlabeled;
      out.points[i].instance = kNoInstance;
    }
  }
  // Masking may leave holes in the instance numbering; compact it.
  std::vector<InstanceId> remap(instance_count(out), kNoInstance);
  InstanceId next = 0;
  for (auto& p : out.points) {
    if (p.instance == kNoInstance) continue;
    if (remap[p.instance] == kNoInstance) remap[p.instance] = next++;
    p.instance = remap[p.instance];
  }
  return out;
}

}  // namespace lgseg
