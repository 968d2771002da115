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

#include "lgseg/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "lgseg/binary_io.hpp"
#include "lgseg/error.hpp"
#include "text_util.hpp"

namespace lgseg {
namespace {

// Ordering shared by top-k selection and split assignment.
template <typename Count>
bool count_desc_name_asc(Count ca, const std::string& na, Count cb, const std::string& nb) {
  if (ca != cb) return ca > cb;
  return na < nb;
}

std::vector<Split> splits_by_point_count(const std::vector<CategoryRecord>& records, SplitSizes sizes) {
  if (sizes.total() != records.size()) {
    throw SplitSizeError("split sizes " + std::to_string(sizes.head) + "/" + std::to_string(sizes.common) +
                         "/" + std::to_string(sizes.tail) + " do not sum to " +
                         std::to_string(records.size()));
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return count_desc_name_asc(records[a].point_count, records[a].name, records[b].point_count,
                               records[b].name);
  });
  std::vector<Split> splits(records.size(), Split::tail);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    Split s = Split::tail;
    if (rank < sizes.head) {
      s = Split::head;
    } else if (rank < sizes.head + sizes.common) {
      s = Split::common;
    }
    splits[order[rank]] = s;
  }
  return splits;
}

double log_in(double x, LogBase base) { return base == LogBase::natural ? std::log(x) : std::log10(x); }

void require_countable(const CategoryRecord& r) {
  if (r.point_count < 2) {
    throw CatalogCountTooSmall("category '" + r.name + "' has point_count " + std::to_string(r.point_count) +
                               " (< 2); its log-frequency weight is degenerate");
  }
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::head:
      return "head";
    case Split::common:
      return "common";
    case Split::tail:
      return "tail";
  }
  return "tail";
}

Split parse_split(std::string_view text) {
  text = text::trim(text);
  if (text == "head") return Split::head;
  if (text == "common") return Split::common;
  if (text == "tail") return Split::tail;
  throw FormatError("unknown split '" + std::string(text) + "'");
}

SplitSizes proportional_split_sizes(std::size_t n) {
  SplitSizes s;
  s.head = static_cast<std::size_t>(std::llround(static_cast<double>(n) * 66.0 / 200.0));
  s.tail = s.head;
  if (2 * s.head > n) s.head = s.tail = n / 2;
  s.common = n - s.head - s.tail;
  return s;
}

std::string canonical_label(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (char c : raw) {
    if (c == '_') c = ' ';
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

LabelCatalog::LabelCatalog(std::vector<CategoryRecord> records)
    : LabelCatalog(records, splits_by_point_count(records, proportional_split_sizes(records.size()))) {}

LabelCatalog::LabelCatalog(std::vector<CategoryRecord> records, std::vector<Split> splits)
    : records_(std::move(records)), splits_(std::move(splits)) {
  if (splits_.size() != records_.size()) {
    throw SplitSizeError("split list length does not match record count");
  }
  if (records_.size() >= kUnlabeled) throw CatalogSizeError("too many categories for 16-bit ids");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].id != i) {
      throw FormatError("category ids must be contiguous from 0; record " + std::to_string(i) + " has id " +
                        std::to_string(records_[i].id));
    }
    auto canon = canonical_label(records_[i].name);
    if (canon.empty()) throw FormatError("empty category name at id " + std::to_string(i));
    if (!seen.insert(canon).second) throw FormatError("duplicate category name '" + records_[i].name + "'");
  }
}

const CategoryRecord& LabelCatalog::record(CategoryId id) const {
  if (id >= records_.size()) throw DimensionError("category id " + std::to_string(id) + " out of range");
  return records_[id];
}

Split LabelCatalog::split(CategoryId id) const {
  if (id >= splits_.size()) throw DimensionError("category id " + std::to_string(id) + " out of range");
  return splits_[id];
}

std::vector<CategoryId> LabelCatalog::ids_in(Split split) const {
  std::vector<CategoryId> out;
  for (std::size_t i = 0; i < splits_.size(); ++i) {
    if (splits_[i] == split) out.push_back(static_cast<CategoryId>(i));
  }
  return out;
}

std::vector<std::string> LabelCatalog::names() const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.name);
  return out;
}

std::optional<CategoryId> LabelCatalog::find(std::string_view name) const {
  const auto canon = canonical_label(name);
  for (const auto& r : records_) {
    if (canonical_label(r.name) == canon) return r.id;
  }
  return std::nullopt;
}

std::vector<CategoryRecord> select_top_k(std::vector<CategoryRecord> records, std::size_t k) {
  if (records.empty()) throw CatalogSizeError("select_top_k: no records");
  if (k == 0 || k > records.size()) {
    throw CatalogSizeError("select_top_k: k=" + std::to_string(k) + " with " + std::to_string(records.size()) +
                           " records");
  }
  std::sort(records.begin(), records.end(), [](const CategoryRecord& a, const CategoryRecord& b) {
    return count_desc_name_asc(a.instance_count, a.name, b.instance_count, b.name);
  });
  records.resize(k);
  for (std::size_t i = 0; i < k; ++i) records[i].id = static_cast<CategoryId>(i);
  return records;
}

LabelCatalog assign_splits(const LabelCatalog& catalog, SplitSizes sizes) {
  auto splits = splits_by_point_count(catalog.records(), sizes);
  auto out = LabelCatalog(catalog.records(), std::move(splits));
  std::vector<std::pair<std::string, std::string>> aliases;
  for (const auto& [raw, id] : catalog.raw_to_canonical()) {
    aliases.emplace_back(raw, id == kUnlabeled ? std::string() : catalog.record(id).name);
  }
  return with_raw_mapping(std::move(out), aliases);
}

std::vector<double> alpha_weights(const LabelCatalog& catalog, LogBase base) {
  std::vector<double> w;
  w.reserve(catalog.size());
  double total = 0.0;
  for (const auto& r : catalog.records()) {
    require_countable(r);
    w.push_back(log_in(static_cast<double>(r.point_count), base));
    total += w.back();
  }
  for (auto& x : w) x /= total;
  return w;
}

std::vector<double> inverse_log_weights(const LabelCatalog& catalog, std::span<const CategoryId> ids,
                                        LogBase base) {
  std::vector<double> p;
  p.reserve(ids.size());
  double total = 0.0;
  for (CategoryId id : ids) {
    const auto& r = catalog.record(id);
    require_countable(r);
    p.push_back(1.0 / log_in(static_cast<double>(r.point_count), base));
    total += p.back();
  }
  for (auto& x : p) x /= total;
  return p;
}

CategoryId map_raw_label(const LabelCatalog& catalog, std::string_view raw) {
  const auto canon = canonical_label(raw);
  if (auto it = catalog.raw_to_canonical().find(canon); it != catalog.raw_to_canonical().end()) {
    return it->second;
  }
  return catalog.find(canon).value_or(kUnlabeled);
}

LabelCatalog with_raw_mapping(LabelCatalog catalog,
                              std::span<const std::pair<std::string, std::string>> mapping) {
  for (const auto& [raw, target] : mapping) {
    catalog.raw_to_canonical_[canonical_label(raw)] = catalog.find(target).value_or(kUnlabeled);
  }
  return catalog;
}

LabelCatalog with_counts(const LabelCatalog& catalog, std::span<const CategoryCounts> counts) {
  if (counts.size() != catalog.size()) {
    throw DimensionError("with_counts: " + std::to_string(counts.size()) + " counts for " +
                         std::to_string(catalog.size()) + " categories");
  }
  auto records = catalog.records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].instance_count = counts[i].instance_count;
    records[i].point_count = counts[i].point_count;
  }
  return assign_splits(LabelCatalog(std::move(records)), proportional_split_sizes(catalog.size()));
}

std::string format_catalog(const LabelCatalog& catalog) {
  std::ostringstream out;
  for (const auto& r : catalog.records()) {
    out << r.id << '\t' << r.name << '\t' << r.instance_count << '\t' << r.point_count << '\t'
        << to_string(catalog.split(r.id)) << '\n';
  }
  return out.str();
}

LabelCatalog parse_catalog(std::string_view content) {
  std::vector<CategoryRecord> records;
  std::vector<Split> splits;
  for (auto line : text::lines(content)) {
    const auto fields = text::split(line, '\t');
    if (fields.size() != 5) {
      throw FormatError("catalog line needs 5 tab-separated fields: '" + std::string(line) + "'");
    }
    CategoryRecord r;
    const auto id = text::parse_u64(fields[0], "category id");
    if (id >= kUnlabeled) throw FormatError("category id out of range");
    r.id = static_cast<CategoryId>(id);
    r.name = std::string(fields[1]);
    r.instance_count = text::parse_u64(fields[2], "instance_count");
    r.point_count = text::parse_u64(fields[3], "point_count");
    records.push_back(std::move(r));
    splits.push_back(parse_split(fields[4]));
  }
  return LabelCatalog(std::move(records), std::move(splits));
}

void write_catalog(const std::filesystem::path& path, const LabelCatalog& catalog) {
  const auto s = format_catalog(catalog);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

LabelCatalog read_catalog(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_catalog(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::vector<std::pair<std::string, std::string>> parse_label_mapping(std::string_view content) {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto line : text::lines(content)) {
    if (line.front() == '#') continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() != 2) {
      throw FormatError("mapping line needs 2 tab-separated fields: '" + std::string(line) + "'");
    }
    out.emplace_back(std::string(text::trim(fields[0])), std::string(text::trim(fields[1])));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_label_mapping(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_label_mapping(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace lgseg
