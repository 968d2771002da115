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
#include <utility>
#include <vector>

#include "lgseg/types.hpp"

namespace lgseg {

enum class Split : std::uint8_t { head, common, tail };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct CategoryRecord {
  CategoryId id = 0;
  std::string name;
  std::uint64_t instance_count = 0;  // train-set instances
  std::uint64_t point_count = 0;     // train-set annotated surface points

  bool operator==(const CategoryRecord&) const = default;
};

struct SplitSizes {
  std::size_t head = 0;
  std::size_t common = 0;
  std::size_t tail = 0;

  std::size_t total() const { return head + common + tail; }
};

// Head/common/tail sizes in the 66/68/66 proportion of the 200-class
// benchmark; exactly (66, 68, 66) for n = 200.
SplitSizes proportional_split_sizes(std::size_t n);

// Lower-cases, maps '_' to ' ', trims and collapses runs of whitespace.
std::string canonical_label(std::string_view raw);

// Category taxonomy. Immutable once built; every id carries exactly one split.
class LabelCatalog {
 public:
  LabelCatalog() = default;
  // Splits default to proportional_split_sizes over point_count order.
  explicit LabelCatalog(std::vector<CategoryRecord> records);
  LabelCatalog(std::vector<CategoryRecord> records, std::vector<Split> splits);

  std::size_t size() const { return records_.size(); }
  const std::vector<CategoryRecord>& records() const { return records_; }
  const CategoryRecord& record(CategoryId id) const;
  Split split(CategoryId id) const;
  const std::vector<Split>& splits() const { return splits_; }
  std::vector<CategoryId> ids_in(Split split) const;
  std::vector<std::string> names() const;

  // Exact match on canonical names.
  std::optional<CategoryId> find(std::string_view name) const;

  // Canonical raw label -> id.
  const std::map<std::string, CategoryId>& raw_to_canonical() const { return raw_to_canonical_; }

  bool operator==(const LabelCatalog&) const = default;

 private:
  friend LabelCatalog with_raw_mapping(LabelCatalog catalog,
                                       std::span<const std::pair<std::string, std::string>> mapping);

  std::vector<CategoryRecord> records_;
  std::vector<Split> splits_;
  std::map<std::string, CategoryId> raw_to_canonical_;
};

// The k records with the largest instance_count, re-indexed 0..k-1 in
// descending-count order (ties: name ascending). Throws CatalogSizeError.
std::vector<CategoryRecord> select_top_k(std::vector<CategoryRecord> records, std::size_t k);

// Splits by point_count descending (ties: name ascending). Throws SplitSizeError.
LabelCatalog assign_splits(const LabelCatalog& catalog, SplitSizes sizes);

enum class LogBase { natural, ten };

// Class-balancing weights alpha_i = log(n_i) / sum_j log(n_j) over point
// counts. Throws CatalogCountTooSmall when any n_i < 2.
std::vector<double> alpha_weights(const LabelCatalog& catalog, LogBase base = LogBase::natural);

// p_i proportional to 1 / log(n_i) over the given ids, normalized on that subset.
std::vector<double> inverse_log_weights(const LabelCatalog& catalog, std::span<const CategoryId> ids,
                                        LogBase base = LogBase::natural);

// Canonical id for a raw annotation label, or kUnlabeled.
CategoryId map_raw_label(const LabelCatalog& catalog, std::string_view raw);

// Attaches raw -> canonical-name aliases. Aliases whose target is not in the
// catalog map to kUnlabeled.
LabelCatalog with_raw_mapping(LabelCatalog catalog,
                              std::span<const std::pair<std::string, std::string>> mapping);

// Replaces instance/point counts; splits are recomputed proportionally.
struct CategoryCounts {
  std::uint64_t instance_count = 0;
  std::uint64_t point_count = 0;
  bool operator==(const CategoryCounts&) const = default;
};
LabelCatalog with_counts(const LabelCatalog& catalog, std::span<const CategoryCounts> counts);

// Catalog file: one tab-separated line per record
// (id, name, instance_count, point_count, split).
std::string format_catalog(const LabelCatalog& catalog);
LabelCatalog parse_catalog(std::string_view text);
void write_catalog(const std::filesystem::path& path, const LabelCatalog& catalog);
LabelCatalog read_catalog(const std::filesystem::path& path);

// Raw-label mapping file: tab-separated raw_name, canonical_name.
std::vector<std::pair<std::string, std::string>> parse_label_mapping(std::string_view text);
std::vector<std::pair<std::string, std::string>> read_label_mapping(const std::filesystem::path& path);

}  // namespace lgseg
