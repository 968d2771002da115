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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lgseg/catalog.hpp"
#include "lgseg/geometry.hpp"
#include "lgseg/rng.hpp"
#include "lgseg/scene.hpp"

namespace lgseg {

// Rows are ground truth, columns predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n = 0) : n_(n), counts_(n * n, 0) {}

  std::size_t size() const { return n_; }
  std::uint64_t at(std::size_t gt, std::size_t pred) const { return counts_[gt * n_ + pred]; }
  std::uint64_t& at(std::size_t gt, std::size_t pred) { return counts_[gt * n_ + pred]; }
  std::uint64_t total() const;
  void merge(const ConfusionMatrix& other);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

// Adds every point whose ground truth is labeled. Throws DimensionError on
// length mismatch or an id outside the matrix (including an unlabeled
// prediction for a labeled point).
void accumulate(ConfusionMatrix& cm, std::span<const CategoryId> gt, std::span<const CategoryId> pred);

struct CategoryMetrics {
  bool present = false;  // tp + fp + fn > 0
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct SplitMean {
  std::size_t present = 0;  // categories averaged
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct EvalReport {
  std::vector<CategoryMetrics> categories;
  SplitMean head;
  SplitMean common;
  SplitMean tail;
  SplitMean all;  // over every present category, not a mean of split means

  const SplitMean& mean(Split split) const;
};

// Absent categories are excluded from every mean; a present category with a
// zero precision or recall denominator scores 0 there.
EvalReport metrics(const ConfusionMatrix& cm, std::span<const Split> splits);

// Tab-separated "id name split IoU precision recall" per category (6
// decimals, "absent" for absent categories) followed by "mean <split> ..."
// lines for head, common, tail and all.
std::string format_report(const EvalReport& report, const LabelCatalog& catalog);
std::string report_json(const EvalReport& report, const LabelCatalog& catalog);

struct InstancePrediction {
  std::vector<std::uint32_t> points;  // sorted, unique
  CategoryId category = kUnlabeled;
  double confidence = 0.0;
};

struct GroundTruthInstance {
  std::vector<std::uint32_t> points;  // sorted, unique
  CategoryId category = kUnlabeled;
};

std::vector<GroundTruthInstance> ground_truth_instances(const Scene& scene);
double mask_iou(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

// Per category AP; nullopt for categories without ground-truth instances.
struct ApResult {
  std::vector<std::optional<double>> per_category;
  double mean = 0.0;  // over categories with ground truth
};

// Predictions sorted by confidence (ties: lower index first), each greedily
// matched to the unmatched same-category ground truth of highest mask IoU
// (>= tau); all-point interpolated area under the precision-recall curve.
ApResult ap_at_iou(std::span<const InstancePrediction> preds, std::span<const GroundTruthInstance> gts,
                   std::size_t n_categories, double tau);

// 0.50, 0.55, ..., 0.95.
std::array<double, 10> range_thresholds();

struct MapSummary {
  double map25 = 0.0;
  double map50 = 0.0;
  double map50_95 = 0.0;
};
MapSummary map_range(std::span<const InstancePrediction> preds, std::span<const GroundTruthInstance> gts,
                     std::size_t n_categories);

// Appends k points, each maximizing the minimum distance to everything
// selected so far (ties: lowest index). Throws DimensionError when k exceeds
// the unselected count or no seed is given.
std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::span<const std::size_t> seeds,
                                                 std::size_t k);

// Budget round(fraction * labeled points): one random point per instance,
// the rest by farthest point sampling over labeled points; with a budget
// below the instance count a random subset of instances gets one point each.
std::vector<bool> sample_limited_annotations(const Scene& scene, double fraction, Rng& rng);

}  // namespace lgseg
