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

#include "lgseg/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>

#include "lgseg/error.hpp"

namespace lgseg {
namespace {

void add_to(SplitMean& m, const CategoryMetrics& c) {
  ++m.present;
  m.iou += c.iou;
  m.precision += c.precision;
  m.recall += c.recall;
}

void finish(SplitMean& m) {
  if (m.present == 0) return;
  const double n = static_cast<double>(m.present);
  m.iou /= n;
  m.precision /= n;
  m.recall /= n;
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

nlohmann::json mean_json(const SplitMean& m) {
  return {{"categories", m.present}, {"iou", m.iou}, {"precision", m.precision}, {"recall", m.recall}};
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw DimensionError("merging confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

void accumulate(ConfusionMatrix& cm, std::span<const CategoryId> gt, std::span<const CategoryId> pred) {
  if (gt.size() != pred.size()) {
    throw DimensionError("ground truth has " + std::to_string(gt.size()) + " points, prediction " +
                         std::to_string(pred.size()));
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == kUnlabeled) continue;
    if (gt[i] >= cm.size() || pred[i] >= cm.size()) {
      throw DimensionError("category id out of range at point " + std::to_string(i));
    }
    ++cm.at(gt[i], pred[i]);
  }
}

const SplitMean& EvalReport::mean(Split split) const {
  switch (split) {
    case Split::head:
      return head;
    case Split::common:
      return common;
    case Split::tail:
      return tail;
  }
  return all;
}

EvalReport metrics(const ConfusionMatrix& cm, std::span<const Split> splits) {
  const std::size_t n = cm.size();
  if (splits.size() != n) throw DimensionError("split list does not match the confusion matrix");
  EvalReport r;
  r.categories.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    for (std::size_t k = 0; k < n; ++k) {
      row += cm.at(c, k);
      col += cm.at(k, c);
    }
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t fp = col - tp;
    const std::uint64_t fn = row - tp;
    auto& m = r.categories[c];
    m.present = tp + fp + fn > 0;
    if (!m.present) continue;
    m.iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    add_to(r.all, m);
    switch (splits[c]) {
      case Split::head:
        add_to(r.head, m);
        break;
      case Split::common:
        add_to(r.common, m);
        break;
      case Split::tail:
        add_to(r.tail, m);
        break;
    }
  }
  finish(r.head);
  finish(r.common);
  finish(r.tail);
  finish(r.all);
  return r;
}

std::string format_report(const EvalReport& report, const LabelCatalog& catalog) {
  if (report.categories.size() != catalog.size()) throw DimensionError("report does not match the catalog");
  std::string out;
  for (std::size_t c = 0; c < catalog.size(); ++c) {
    const auto id = static_cast<CategoryId>(c);
    const auto& m = report.categories[c];
    out += std::to_string(c) + '\t' + catalog.record(id).name + '\t' + std::string(to_string(catalog.split(id)));
    if (m.present) {
      out += '\t' + fixed6(m.iou) + '\t' + fixed6(m.precision) + '\t' + fixed6(m.recall) + '\n';
    } else {
      out += "\tabsent\tabsent\tabsent\n";
    }
  }
  const std::pair<const char*, const SplitMean*> means[] = {
      {"head", &report.head}, {"common", &report.common}, {"tail", &report.tail}, {"all", &report.all}};
  for (const auto& [name, m] : means) {
    out += std::string("mean\t") + name;
    if (m->present > 0) {
      out += '\t' + fixed6(m->iou) + '\t' + fixed6(m->precision) + '\t' + fixed6(m->recall) + '\n';
    } else {
      out += "\tabsent\tabsent\tabsent\n";
    }
  }
  return out;
}

std::string report_json(const EvalReport& report, const LabelCatalog& catalog) {
  if (report.categories.size() != catalog.size()) throw DimensionError("report does not match the catalog");
  nlohmann::json cats = nlohmann::json::array();
  for (std::size_t c = 0; c < catalog.size(); ++c) {
    const auto id = static_cast<CategoryId>(c);
    const auto& m = report.categories[c];
    nlohmann::json j = {{"id", c}, {"name", catalog.record(id).name}, {"split", to_string(catalog.split(id))},
                        {"present", m.present}};
    if (m.present) {
      j["iou"] = m.iou;
      j["precision"] = m.precision;
      j["recall"] = m.recall;
    }
    cats.push_back(std::move(j));
  }
  nlohmann::json root = {{"categories", std::move(cats)},
                         {"mean",
                          {{"head", mean_json(report.head)},
                           {"common", mean_json(report.common)},
                           {"tail", mean_json(report.tail)},
                           {"all", mean_json(report.all)}}}};
  return root.dump(2) + "\n";
}

std::vector<GroundTruthInstance> ground_truth_instances(const Scene& scene) {
  std::map<InstanceId, GroundTruthInstance> by_id;
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const auto& p = scene.points[i];
    if (p.instance == kNoInstance || p.semantic == kUnlabeled) continue;
    auto& g = by_id[p.instance];
    g.category = p.semantic;
    g.points.push_back(static_cast<std::uint32_t>(i));
  }
  std::vector<GroundTruthInstance> out;
  out.reserve(by_id.size());
  for (auto& [id, g] : by_id) out.push_back(std::move(g));
  return out;
}

double mask_iou(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  std::size_t inter = 0;
  for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

ApResult ap_at_iou(std::span<const InstancePrediction> preds, std::span<const GroundTruthInstance> gts,
                   std::size_t n_categories, double tau) {
  ApResult out;
  out.per_category.assign(n_categories, std::nullopt);
  std::vector<std::vector<std::size_t>> gt_of(n_categories);
  std::vector<std::vector<std::size_t>> pred_of(n_categories);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gts[g].category >= n_categories) throw DimensionError("ground-truth category out of range");
    gt_of[gts[g].category].push_back(g);
  }
  for (std::size_t p = 0; p < preds.size(); ++p) {
    if (preds[p].category >= n_categories) throw DimensionError("predicted category out of range");
    pred_of[preds[p].category].push_back(p);
  }
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < n_categories; ++c) {
    const auto& cg = gt_of[c];
    if (cg.empty()) continue;
    auto order = pred_of[c];
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return preds[a].confidence > preds[b].confidence;
    });
    std::vector<bool> matched(cg.size(), false);
    std::vector<double> precision;
    std::vector<double> recall;
    std::size_t tp = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& pr = preds[order[k]];
      double best = -1.0;
      std::size_t best_g = cg.size();
      for (std::size_t g = 0; g < cg.size(); ++g) {
        if (matched[g]) continue;
        const double iou = mask_iou(pr.points, gts[cg[g]].points);
        if (iou >= tau && iou > best) {
          best = iou;
          best_g = g;
        }
      }
      if (best_g < cg.size()) {
        matched[best_g] = true;
        ++tp;
      }
      precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
      recall.push_back(static_cast<double>(tp) / static_cast<double>(cg.size()));
    }
    // Precision envelope, then area over the recall steps.
    for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t k = 0; k < precision.size(); ++k) {
      if (recall[k] > prev_recall) {
        ap += (recall[k] - prev_recall) * precision[k];
        prev_recall = recall[k];
      }
    }
    out.per_category[c] = ap;
    sum += ap;
    ++counted;
  }
  out.mean = counted ? sum / static_cast<double>(counted) : 0.0;
  return out;
}

std::array<double, 10> range_thresholds() {
  std::array<double, 10> t{};
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (50.0 + 5.0 * static_cast<double>(i)) / 100.0;
  return t;
}

MapSummary map_range(std::span<const InstancePrediction> preds, std::span<const GroundTruthInstance> gts,
                     std::size_t n_categories) {
  MapSummary s;
  s.map25 = ap_at_iou(preds, gts, n_categories, 0.25).mean;
  s.map50 = ap_at_iou(preds, gts, n_categories, 0.5).mean;
  const auto taus = range_thresholds();
  for (double tau : taus) s.map50_95 += ap_at_iou(preds, gts, n_categories, tau).mean;
  s.map50_95 /= static_cast<double>(taus.size());
  return s;
}

std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::span<const std::size_t> seeds,
                                                 std::size_t k) {
  if (seeds.empty()) throw DimensionError("farthest point sampling needs at least one seed");
  std::vector<bool> selected(points.size(), false);
  std::size_t n_selected = 0;
  for (auto s : seeds) {
    if (s >= points.size()) throw DimensionError("seed index out of range");
    if (!selected[s]) ++n_selected;
    selected[s] = true;
  }
  if (k > points.size() - n_selected) {
    throw DimensionError("cannot sample " + std::to_string(k) + " points, only " +
                         std::to_string(points.size() - n_selected) + " remain");
  }
  std::vector<double> dist(points.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (selected[i]) continue;
    for (auto s : seeds) dist[i] = std::min(dist[i], squared_distance(points[i], points[s]));
  }
  std::vector<std::size_t> out;
  out.reserve(k);
  while (out.size() < k) {
    std::size_t best = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!selected[i] && (best == points.size() || dist[i] > dist[best])) best = i;
    }
    selected[best] = true;
    out.push_back(best);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!selected[i]) dist[i] = std::min(dist[i], squared_distance(points[i], points[best]));
    }
  }
  return out;
}

std::vector<bool> sample_limited_annotations(const Scene& scene, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw UsageError("annotation fraction must lie in (0, 1]");
  std::vector<std::size_t> labeled;
  std::map<InstanceId, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const auto& p = scene.points[i];
    if (p.semantic == kUnlabeled) continue;
    labeled.push_back(i);
    if (p.instance != kNoInstance) members[p.instance].push_back(i);
  }
  std::vector<bool> mask(scene.points.size(), false);
  const auto budget = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(labeled.size())));
  if (budget == 0) return mask;
  if (budget >= labeled.size()) {
    for (auto i : labeled) mask[i] = true;
    return mask;
  }

  std::vector<const std::vector<std::size_t>*> instances;
  for (const auto& [id, pts] : members) instances.push_back(&pts);
  if (budget < instances.size()) {
    for (std::size_t k = 0; k < budget; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(instances.size() - k));
      std::swap(instances[k], instances[j]);
      const auto& pts = *instances[k];
      mask[pts[rng.below(pts.size())]] = true;
    }
    return mask;
  }

  // Seeds as positions within the labeled list.
  std::vector<std::size_t> seeds;
  std::map<std::size_t, std::size_t> position;
  for (std::size_t k = 0; k < labeled.size(); ++k) position[labeled[k]] = k;
  for (const auto* pts : instances) seeds.push_back(position[(*pts)[rng.below(pts->size())]]);
  if (seeds.empty()) seeds.push_back(static_cast<std::size_t>(rng.below(labeled.size())));
  std::vector<Vec3> xyz;
  xyz.reserve(labeled.size());
  for (auto i : labeled) xyz.push_back(scene.points[i].pos());
  for (auto s : seeds) mask[labeled[s]] = true;
  for (auto s : farthest_point_sampling(xyz, seeds, budget - seeds.size())) mask[labeled[s]] = true;
  return mask;
}

}  // namespace lgseg
