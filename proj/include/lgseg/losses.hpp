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

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "lgseg/catalog.hpp"
#include "lgseg/embed.hpp"
#include "lgseg/rng.hpp"
#include "lgseg/types.hpp"

namespace lgseg {

enum class Distance { cosine, l1, l2 };

std::string_view to_string(Distance distance);
Distance parse_distance(std::string_view text);

struct ContrastiveConfig {
  double t_pos = 0.0;
  double t_neg = 0.6;
  double lambda = 1.0;
  std::size_t n_neg = 3;
  Distance distance = Distance::cosine;

  void validate() const;
};

struct FocalConfig {
  double gamma = 2.0;
  std::vector<double> alpha;  // empty means uniform 1/N

  void validate(std::size_t n_categories) const;
};

// Value plus gradient with the shape of the differentiated input.
struct LossOutput {
  double value = 0.0;
  Eigen::MatrixXd gradient;
};

struct DistanceValue {
  double value = 0.0;
  Eigen::VectorXd gradient;  // with respect to u
};

// 1 - u.v / (|u||v|). Throws DegenerateEmbeddingError on a zero vector.
DistanceValue cosine_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v);
// l1 and l2 use the metric itself; the l2 gradient at u == v is taken as 0.
DistanceValue distance(Distance kind, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// Per-point negative ids, n_neg per point, stored row-major. Rows of unlabeled
// points hold kUnlabeled and are ignored by the losses.
struct NegativeSets {
  std::size_t n_neg = 0;
  std::vector<CategoryId> ids;

  std::size_t size() const { return n_neg == 0 ? 0 : ids.size() / n_neg; }
  std::span<const CategoryId> of(std::size_t point) const {
    return std::span<const CategoryId>(ids).subspan(point * n_neg, n_neg);
  }
};

// Uniform without replacement from all ids except the point's own.
// Throws NegativeSamplingError when n_categories < n_neg + 1.
NegativeSets sample_negatives(std::span<const CategoryId> assignments, std::size_t n_categories,
                              std::size_t n_neg, Rng& rng);
NegativeSets sample_negatives(std::span<const CategoryId> assignments, const LabelCatalog& catalog,
                              std::size_t n_neg, Rng& rng);

// Text-anchoring hinge losses. features is points x D, anchors is N x D.
// Values are means over labeled points; unlabeled rows get zero gradient.
LossOutput loss_pos(const Eigen::MatrixXd& features, std::span<const CategoryId> assignments,
                    const Eigen::MatrixXd& anchors, const ContrastiveConfig& cfg);
LossOutput loss_neg(const Eigen::MatrixXd& features, std::span<const CategoryId> assignments,
                    const Eigen::MatrixXd& anchors, const NegativeSets& negatives,
                    const ContrastiveConfig& cfg);
LossOutput loss_total(const Eigen::MatrixXd& features, std::span<const CategoryId> assignments,
                      const Eigen::MatrixXd& anchors, const NegativeSets& negatives,
                      const ContrastiveConfig& cfg);

// Classification losses over logits (points x N), means over labeled points.
// Throw NumericError on non-finite logits, DimensionError on bad targets.
LossOutput cross_entropy(const Eigen::MatrixXd& logits, std::span<const CategoryId> targets);
LossOutput focal(const Eigen::MatrixXd& logits, std::span<const CategoryId> targets, double gamma);
LossOutput cfocal(const Eigen::MatrixXd& logits, std::span<const CategoryId> targets, double gamma,
                  std::span<const double> alpha);
LossOutput weighted_ce(const Eigen::MatrixXd& logits, std::span<const CategoryId> targets,
                       std::span<const double> weights);

// Source point with its sampled positives and negatives.
struct ContrastPairs {
  std::vector<std::size_t> sources;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::vector<std::size_t> positives;  // sources.size() x n_pos
  std::vector<std::size_t> negatives;  // sources.size() x n_neg
};

// Every labeled point becomes a source (or max_sources of them, drawn
// uniformly, when nonzero). Throws NegativeSamplingError when a source lacks
// candidates.
ContrastPairs sample_contrast_pairs(std::span<const CategoryId> labels, std::size_t n_pos, std::size_t n_neg,
                                    Rng& rng, std::size_t max_sources = 0);
// Supervised contrastive loss on unit-normalized features.
LossOutput supcon_loss(const Eigen::MatrixXd& features, const ContrastPairs& pairs, double temperature);
LossOutput supcon(const Eigen::MatrixXd& features, std::span<const CategoryId> labels, std::size_t n_pos,
                  std::size_t n_neg, double temperature, Rng& rng);

}  // namespace lgseg
