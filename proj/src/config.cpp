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

#include "lgseg/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>

#include "lgseg/binary_io.hpp"
#include "lgseg/error.hpp"
#include "text_util.hpp"

namespace lgseg {
namespace {

constexpr std::string_view kTrainKeys[] = {
    "lr",          "momentum",       "decay",           "milestones",       "epochs",
    "batch",       "seed",           "use_color",       "resolution",       "cells_per_scene",
    "hidden",      "hidden_layers",  "dim",             "loss",             "gamma",
    "scale_alpha", "objective",      "t_pos",           "t_neg",            "lambda",
    "n_neg",       "distance",       "temperature",     "supcon_pos",       "supcon_neg",
    "supcon_sources", "augment",     "augment.n_samples", "augment.max_attempts", "augment.height_cell",
    "augment.jitter", "augment.max_support", "augment.structural", "workers"};

constexpr std::string_view kSyntheticKeys[] = {"n_categories", "zipf",          "room_extent",
                                               "wall_height",  "density",       "color_noise",
                                               "primitives",   "objects_per_scene", "placement_attempts",
                                               "appearance_seed"};

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

template <typename T>
std::string join_numbers(const std::vector<T>& xs) {
  std::vector<std::string> parts;
  for (auto x : xs) parts.push_back(std::to_string(x));
  return join(parts);
}

Primitive parse_primitive(std::string_view s) {
  if (s == "box") return Primitive::box;
  if (s == "cylinder") return Primitive::cylinder;
  if (s == "sphere") return Primitive::sphere;
  throw UsageError("unknown primitive '" + std::string(s) + "'");
}

std::string_view primitive_name(Primitive p) {
  switch (p) {
    case Primitive::box:
      return "box";
    case Primitive::cylinder:
      return "cylinder";
    case Primitive::sphere:
      return "sphere";
  }
  return "box";
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  for (auto line : text::split(text, '\n')) {
    ++line_no;
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("config line " + std::to_string(line_no) + " lacks '='");
    }
    const auto key = text::trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("config line " + std::to_string(line_no) + " has an empty key");
    kv.set(std::string(key), std::string(text::trim(line.substr(eq + 1))));
  }
  return kv;
}

KeyValues KeyValues::read(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::optional<std::string> KeyValues::get(std::string_view key) const {
  auto it = values_.find(std::string(key));
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void KeyValues::merge(const KeyValues& overrides) {
  for (const auto& [k, v] : overrides.values_) values_[k] = v;
}

std::string KeyValues::text(std::string_view key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : std::move(fallback);
}

double KeyValues::number(std::string_view key, double fallback) const {
  auto v = get(key);
  return v ? text::parse_double(*v, key) : fallback;
}

std::uint64_t KeyValues::integer(std::string_view key, std::uint64_t fallback) const {
  auto v = get(key);
  return v ? text::parse_u64(*v, key) : fallback;
}

bool KeyValues::flag(std::string_view key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "on" || *v == "yes") return true;
  if (*v == "0" || *v == "false" || *v == "off" || *v == "no") return false;
  throw FormatError("invalid boolean for " + std::string(key) + ": '" + *v + "'");
}

std::vector<std::uint64_t> KeyValues::integers(std::string_view key, std::vector<std::uint64_t> fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<std::uint64_t> out;
  for (auto part : text::split(*v, ',')) {
    if (!text::trim(part).empty()) out.push_back(text::parse_u64(part, key));
  }
  return out;
}

std::vector<std::string> KeyValues::words(std::string_view key, std::vector<std::string> fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<std::string> out;
  for (auto part : text::split(*v, ',')) {
    part = text::trim(part);
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

std::vector<std::string> KeyValues::unknown(std::span<const std::string_view> known) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (std::find(known.begin(), known.end(), k) == known.end()) out.push_back(k);
  }
  return out;
}

std::string KeyValues::format() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string format_double(double v) {
  char buf[40];
  const auto end = std::to_chars(buf, buf + sizeof buf, v).ptr;
  return std::string(buf, end);
}

std::span<const std::string_view> train_keys() { return kTrainKeys; }
std::span<const std::string_view> synthetic_keys() { return kSyntheticKeys; }

void apply(const KeyValues& kv, TrainConfig& c) {
  c.lr = kv.number("lr", c.lr);
  c.momentum = kv.number("momentum", c.momentum);
  c.decay = kv.number("decay", c.decay);
  c.epochs = kv.integer("epochs", c.epochs);
  if (kv.contains("milestones")) {
    const auto ms = kv.integers("milestones", {});
    c.milestones.assign(ms.begin(), ms.end());
  }
  c.batch = kv.integer("batch", c.batch);
  c.seed = kv.integer("seed", c.seed);
  c.use_color = kv.flag("use_color", c.use_color);
  c.resolution = kv.number("resolution", c.resolution);
  c.cells_per_scene = kv.integer("cells_per_scene", c.cells_per_scene);
  c.shape.hidden = kv.integer("hidden", c.shape.hidden);
  c.shape.hidden_layers = kv.integer("hidden_layers", c.shape.hidden_layers);
  c.shape.output = kv.integer("dim", c.shape.output);
  if (auto v = kv.get("loss")) c.loss = parse_class_loss(*v);
  c.gamma = kv.number("gamma", c.gamma);
  c.scale_alpha = kv.flag("scale_alpha", c.scale_alpha);
  if (auto v = kv.get("objective")) c.objective = parse_pretrain_objective(*v);
  c.contrastive.t_pos = kv.number("t_pos", c.contrastive.t_pos);
  c.contrastive.t_neg = kv.number("t_neg", c.contrastive.t_neg);
  c.contrastive.lambda = kv.number("lambda", c.contrastive.lambda);
  c.contrastive.n_neg = kv.integer("n_neg", c.contrastive.n_neg);
  if (auto v = kv.get("distance")) c.contrastive.distance = parse_distance(*v);
  c.temperature = kv.number("temperature", c.temperature);
  c.supcon_pos = kv.integer("supcon_pos", c.supcon_pos);
  c.supcon_neg = kv.integer("supcon_neg", c.supcon_neg);
  c.supcon_sources = kv.integer("supcon_sources", c.supcon_sources);
  c.augment = kv.flag("augment", c.augment);
  c.augment_cfg.n_samples = kv.integer("augment.n_samples", c.augment_cfg.n_samples);
  if (kv.contains("augment.n_samples")) c.augment_cfg.max_attempts = 10 * c.augment_cfg.n_samples;
  c.augment_cfg.max_attempts = kv.integer("augment.max_attempts", c.augment_cfg.max_attempts);
  c.augment_cfg.height_cell = kv.number("augment.height_cell", c.augment_cfg.height_cell);
  c.augment_cfg.jitter_sigma = kv.number("augment.jitter", c.augment_cfg.jitter_sigma);
  c.augment_cfg.max_support_height = kv.number("augment.max_support", c.augment_cfg.max_support_height);
  if (kv.contains("augment.structural")) {
    c.augment_cfg.structural_ids.clear();
    for (auto id : kv.integers("augment.structural", {})) {
      c.augment_cfg.structural_ids.push_back(static_cast<CategoryId>(id));
    }
  }
  c.workers = kv.integer("workers", c.workers);
}

void apply(const KeyValues& kv, SyntheticSpec& s) {
  s.n_categories = kv.integer("n_categories", s.n_categories);
  s.zipf_exponent = kv.number("zipf", s.zipf_exponent);
  s.room_extent = kv.number("room_extent", s.room_extent);
  s.wall_height = kv.number("wall_height", s.wall_height);
  s.density = kv.number("density", s.density);
  s.color_noise = kv.number("color_noise", s.color_noise);
  if (kv.contains("primitives")) {
    s.primitives.clear();
    for (const auto& w : kv.words("primitives", {})) s.primitives.push_back(parse_primitive(w));
  }
  s.objects_per_scene = kv.number("objects_per_scene", s.objects_per_scene);
  s.placement_attempts = kv.integer("placement_attempts", s.placement_attempts);
  s.appearance_seed = kv.integer("appearance_seed", s.appearance_seed);
}

KeyValues describe(const TrainConfig& c) {
  KeyValues kv;
  kv.set("lr", format_double(c.lr));
  kv.set("momentum", format_double(c.momentum));
  kv.set("decay", format_double(c.decay));
  kv.set("milestones", join_numbers(c.milestones));
  kv.set("epochs", std::to_string(c.epochs));
  kv.set("batch", std::to_string(c.batch));
  kv.set("seed", std::to_string(c.seed));
  kv.set("use_color", c.use_color ? "true" : "false");
  kv.set("resolution", format_double(c.resolution));
  kv.set("cells_per_scene", std::to_string(c.cells_per_scene));
  kv.set("hidden", std::to_string(c.shape.hidden));
  kv.set("hidden_layers", std::to_string(c.shape.hidden_layers));
  kv.set("dim", std::to_string(c.shape.output));
  kv.set("loss", std::string(to_string(c.loss)));
  kv.set("gamma", format_double(c.gamma));
  kv.set("scale_alpha", c.scale_alpha ? "true" : "false");
  kv.set("objective", std::string(to_string(c.objective)));
  kv.set("t_pos", format_double(c.contrastive.t_pos));
  kv.set("t_neg", format_double(c.contrastive.t_neg));
  kv.set("lambda", format_double(c.contrastive.lambda));
  kv.set("n_neg", std::to_string(c.contrastive.n_neg));
  kv.set("distance", std::string(to_string(c.contrastive.distance)));
  kv.set("temperature", format_double(c.temperature));
  kv.set("supcon_pos", std::to_string(c.supcon_pos));
  kv.set("supcon_neg", std::to_string(c.supcon_neg));
  kv.set("supcon_sources", std::to_string(c.supcon_sources));
  kv.set("augment", c.augment ? "true" : "false");
  kv.set("augment.n_samples", std::to_string(c.augment_cfg.n_samples));
  kv.set("augment.max_attempts", std::to_string(c.augment_cfg.max_attempts));
  kv.set("augment.height_cell", format_double(c.augment_cfg.height_cell));
  kv.set("augment.jitter", format_double(c.augment_cfg.jitter_sigma));
  kv.set("augment.max_support", format_double(c.augment_cfg.max_support_height));
  kv.set("augment.structural", join_numbers(c.augment_cfg.structural_ids));
  kv.set("workers", std::to_string(c.workers));
  return kv;
}

KeyValues describe(const SyntheticSpec& s) {
  KeyValues kv;
  kv.set("n_categories", std::to_string(s.n_categories));
  kv.set("zipf", format_double(s.zipf_exponent));
  kv.set("room_extent", format_double(s.room_extent));
  kv.set("wall_height", format_double(s.wall_height));
  kv.set("density", format_double(s.density));
  kv.set("color_noise", format_double(s.color_noise));
  std::vector<std::string> prims;
  for (auto p : s.primitives) prims.emplace_back(primitive_name(p));
  kv.set("primitives", join(prims));
  kv.set("objects_per_scene", format_double(s.objects_per_scene));
  kv.set("placement_attempts", std::to_string(s.placement_attempts));
  kv.set("appearance_seed", std::to_string(s.appearance_seed));
  return kv;
}

}  // namespace lgseg
