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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lgseg/synthetic.hpp"
#include "lgseg/train.hpp"

namespace lgseg {

// Flat key=value configuration. Blank lines and '#' comments are ignored;
// later assignments win.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text);
  static KeyValues read(const std::filesystem::path& path);

  void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
  bool contains(std::string_view key) const { return values_.find(std::string(key)) != values_.end(); }
  std::optional<std::string> get(std::string_view key) const;
  // Copies every entry of `overrides` over this one.
  void merge(const KeyValues& overrides);

  std::string text(std::string_view key, std::string fallback) const;
  double number(std::string_view key, double fallback) const;
  std::uint64_t integer(std::string_view key, std::uint64_t fallback) const;
  bool flag(std::string_view key, bool fallback) const;
  std::vector<std::uint64_t> integers(std::string_view key, std::vector<std::uint64_t> fallback) const;
  std::vector<std::string> words(std::string_view key, std::vector<std::string> fallback) const;

  // Keys not listed in `known`.
  std::vector<std::string> unknown(std::span<const std::string_view> known) const;
  const std::map<std::string, std::string>& entries() const { return values_; }
  std::string format() const;

 private:
  std::map<std::string, std::string> values_;
};

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

// Keys understood by apply() for each configuration type.
std::span<const std::string_view> train_keys();
std::span<const std::string_view> synthetic_keys();

void apply(const KeyValues& kv, TrainConfig& cfg);
void apply(const KeyValues& kv, SyntheticSpec& spec);

// Every field, in the key=value vocabulary of apply().
KeyValues describe(const TrainConfig& cfg);
KeyValues describe(const SyntheticSpec& spec);

}  // namespace lgseg
