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

#include <cmath>

#include "lgseg/catalog.hpp"
#include "lgseg/error.hpp"
#include "lgseg/rng.hpp"

using namespace lgseg;

namespace {

LabelCatalog from_counts(std::vector<std::uint64_t> counts) {
  std::vector<CategoryRecord> r;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    r.push_back({static_cast<CategoryId>(i), "c" + std::to_string(i), counts[i], counts[i]});
  }
  return LabelCatalog(std::move(r));
}

std::size_t count_split(const LabelCatalog& c, Split s) { return c.ids_in(s).size(); }

}  // namespace

TEST_CASE("canonical labels") {
  CHECK(canonical_label("  Trash_Can ") == "trash can");
  CHECK(canonical_label("kitchen\t cabinet") == "kitchen cabinet");
  CHECK(canonical_label("") == "");
}

TEST_CASE("select_top_k") {
  std::vector<CategoryRecord> r{{0, "a", 5, 0}, {1, "b", 9, 0}, {2, "c", 1, 0}};
  auto top = select_top_k(r, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].instance_count == 9);
  CHECK(top[1].instance_count == 5);
  CHECK(top[0].id == 0);
  CHECK(top[1].id == 1);

  auto tie = select_top_k({{0, "b", 4, 0}, {1, "a", 4, 0}}, 1);
  REQUIRE(tie.size() == 1);
  CHECK(tie[0].name == "a");

  CHECK_THROWS_AS(select_top_k(r, 4), CatalogSizeError);
  CHECK_THROWS_AS(select_top_k(r, 0), CatalogSizeError);
}

TEST_CASE("select_top_k keeps well-sampled categories") {
  // 550 names with a long tail of counts; the 200 most frequent all have at
  // least 10 instances by construction.
  Rng rng(1);
  std::vector<CategoryRecord> r;
  for (std::size_t i = 0; i < 550; ++i) {
    const std::uint64_t count = i < 210 ? 10 + rng.below(500) : rng.below(10);
    r.push_back({static_cast<CategoryId>(i), "name" + std::to_string(i), count, count * 100});
  }
  const auto top = select_top_k(r, 200);
  CHECK(top.size() == 200);
  for (const auto& rec : top) CHECK(rec.instance_count >= 10);
}

TEST_CASE("assign_splits") {
  Rng rng(2);
  std::vector<std::uint64_t> counts(200);
  for (auto& c : counts) c = 2 + rng.below(100000);
  const auto cat = assign_splits(from_counts(counts), {66, 68, 66});
  CHECK(count_split(cat, Split::head) == 66);
  CHECK(count_split(cat, Split::common) == 68);
  CHECK(count_split(cat, Split::tail) == 66);
  CHECK(proportional_split_sizes(200).head == 66);
  CHECK(proportional_split_sizes(200).common == 68);

  // Hand cut: the two largest counts are head, the two smallest tail.
  const auto six = assign_splits(from_counts({50, 10, 70, 20, 60, 30}), {2, 2, 2});
  CHECK(six.ids_in(Split::head) == std::vector<CategoryId>{2, 4});
  CHECK(six.ids_in(Split::common) == std::vector<CategoryId>{0, 5});
  CHECK(six.ids_in(Split::tail) == std::vector<CategoryId>{1, 3});

  // Equal counts fall back to name order: c0, c1 head ... c4, c5 tail.
  const auto equal = assign_splits(from_counts({7, 7, 7, 7, 7, 7}), {2, 2, 2});
  CHECK(equal.ids_in(Split::head) == std::vector<CategoryId>{0, 1});
  CHECK(equal.ids_in(Split::tail) == std::vector<CategoryId>{4, 5});

  CHECK_THROWS_AS(assign_splits(from_counts({1, 2, 3}), {1, 1, 2}), SplitSizeError);
}

TEST_CASE("alpha weights") {
  const auto w = alpha_weights(from_counts({100, 10}));
  CHECK(w[0] == 2.0 / 3.0);
  CHECK(w[1] == 1.0 / 3.0);

  Rng rng(3);
  std::vector<std::uint64_t> counts(50);
  for (auto& c : counts) c = 2 + rng.below(1000000);
  const auto cat = from_counts(counts);
  const auto nat = alpha_weights(cat, LogBase::natural);
  const auto ten = alpha_weights(cat, LogBase::ten);
  double total = 0.0;
  for (auto c : counts) total += std::log(static_cast<double>(c));
  double sum = 0.0;
  for (std::size_t i = 0; i < nat.size(); ++i) {
    sum += nat[i];
    CHECK(std::abs(nat[i] - ten[i]) < 1e-12);
    CHECK(std::abs(nat[i] - std::log(static_cast<double>(counts[i])) / total) < 1e-12);
  }
  CHECK(std::abs(sum - 1.0) < 1e-12);

  for (double x : alpha_weights(from_counts({9, 9, 9, 9}))) CHECK(x == 0.25);
  CHECK_THROWS_AS(alpha_weights(from_counts({100, 1})), CatalogCountTooSmall);
  CHECK_THROWS_AS(alpha_weights(from_counts({0, 100})), CatalogCountTooSmall);
}

TEST_CASE("inverse log weights") {
  const auto e2 = static_cast<std::uint64_t>(std::llround(std::exp(2.0)));
  const auto e4 = static_cast<std::uint64_t>(std::llround(std::exp(4.0)));
  const auto cat = from_counts({e2, e4});
  const std::vector<CategoryId> both{0, 1};
  const auto p = inverse_log_weights(cat, both);
  // Integer counts only approximate e^2 and e^4; compare against the exact
  // logs of the integers too.
  const double a = 1.0 / std::log(static_cast<double>(e2)), b = 1.0 / std::log(static_cast<double>(e4));
  CHECK(p[0] == doctest::Approx(a / (a + b)).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-2));

  const auto uni = inverse_log_weights(from_counts({5, 5, 5}), std::vector<CategoryId>{0, 1, 2});
  for (double x : uni) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const auto tail_cat = assign_splits(from_counts({1000, 500, 100, 50, 10, 5}), {2, 2, 2});
  const auto tail = tail_cat.ids_in(Split::tail);
  const auto pt = inverse_log_weights(tail_cat, tail);
  CHECK(pt.size() == 2);
  CHECK(pt[0] + pt[1] == doctest::Approx(1.0));
  CHECK(pt[1] > pt[0]);  // rarer category (5) sampled more often than 10
}

TEST_CASE("raw label mapping") {
  LabelCatalog cat(std::vector<CategoryRecord>{{0, "chair", 5, 50}, {1, "trash can", 3, 30}});
  CHECK(map_raw_label(cat, "chair") == 0);
  CHECK(map_raw_label(cat, "Trash_Can") == 1);
  CHECK(map_raw_label(cat, "pterodactyl") == kUnlabeled);

  const auto mapping = parse_label_mapping("office chair\tchair\nwastebin\ttrash can\nposter\tpainting\n");
  REQUIRE(mapping.size() == 3);
  const auto mapped = with_raw_mapping(cat, mapping);
  for (const auto& [raw, target] : mapping) {
    const auto id = cat.find(target);
    CHECK(map_raw_label(mapped, raw) == (id ? *id : kUnlabeled));
  }
  CHECK(map_raw_label(mapped, "office chair") == 0);
  CHECK(map_raw_label(mapped, "chair") == 0);
}
