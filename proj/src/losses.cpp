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

#include "lgseg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lgseg/error.hpp"

namespace lgseg {
namespace {

void check_rows(const Eigen::MatrixXd& m, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(m.rows()) != n) {
    throw DimensionError(std::string(what) + ": " + std::to_string(m.rows()) + " rows for " + std::to_string(n) +
                         " labels");
  }
}

void check_anchor_dims(const Eigen::MatrixXd& features, const Eigen::MatrixXd& anchors) {
  if (features.cols() != anchors.cols()) {
    throw DimensionError("feature dim " + std::to_string(features.cols()) + " vs anchor dim " +
                         std::to_string(anchors.cols()));
  }
}

CategoryId checked_target(CategoryId t, Eigen::Index n_categories) {
  if (t != kUnlabeled && t >= n_categories) {
    throw DimensionError("category id " + std::to_string(t) + " out of range");
  }
  return t;
}

std::size_t count_labeled(std::span<const CategoryId> labels) {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](CategoryId c) {
    return c != kUnlabeled;
  }));
}

// -w (1 - p_t)^gamma log p_t averaged over labeled rows. 1 - p_t is summed
// from the non-target probabilities so it stays accurate as p_t -> 1.
LossOutput modulated_ce(const Eigen::MatrixXd& logits, std::span<const CategoryId> targets, double gamma,
                        std::span<const double> weights) {
  check_rows(logits, targets.size(), "logits");
  if (!logits.allFinite()) throw NumericError("non-finite logits");
  const Eigen::Index n = logits.cols();
  if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != n) {
    throw DimensionError("class weight vector length " + std::to_string(weights.size()) + " for " +
                         std::to_string(n) + " categories");
  }
  LossOutput out;
  out.gradient = Eigen::MatrixXd::Zero(logits.rows(), n);
  const std::size_t labeled = count_labeled(targets);
  if (labeled == 0) return out;
  const double inv = 1.0 / static_cast<double>(labeled);
  Eigen::VectorXd p(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const CategoryId t = checked_target(targets[static_cast<std::size_t>(i)], n);
    if (t == kUnlabeled) continue;
    const double zmax = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      p[k] = std::exp(logits(i, k) - zmax);
      sum += p[k];
    }
    const double lse = zmax + std::log(sum);
    const double log_pt = logits(i, t) - lse;
    p /= sum;
    double q = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != t) q += p[k];
    }
    const double w = weights.empty() ? 1.0 : weights[t];
    const double mod = std::pow(q, gamma);
    total += -w * mod * log_pt;
    // d/dz_k = w [gamma q^(gamma-1) p_t log p_t - q^gamma] (delta_tk - p_k)
    double dpt = -mod;
    if (gamma != 0.0 && q > 0.0) dpt += gamma * std::pow(q, gamma - 1.0) * p[t] * log_pt;
    const double c = w * dpt * inv;
    for (Eigen::Index k = 0; k < n; ++k) {
      out.gradient(i, k) = c * ((k == t ? 1.0 : 0.0) - p[k]);
    }
  }
  out.value = total * inv;
  if (!std::isfinite(out.value) || !out.gradient.allFinite()) throw NumericError("non-finite classification loss");
  return out;
}

}  // namespace

std::string_view to_string(Distance distance) {
  switch (distance) {
    case Distance::cosine:
      return "cosine";
    case Distance::l1:
      return "l1";
    case Distance::l2:
      return "l2";
  }
  return "cosine";
}

Distance parse_distance(std::string_view text) {
  if (text == "cosine") return Distance::cosine;
  if (text == "l1") return Distance::l1;
  if (text == "l2") return Distance::l2;
  throw UsageError("unknown distance '" + std::string(text) + "'");
}

void ContrastiveConfig::validate() const {
  if (n_neg < 1) throw UsageError("n_neg must be at least 1");
  if (lambda < 0.0) throw UsageError("lambda must be non-negative");
  if (!(t_pos >= 0.0 && t_pos < t_neg)) throw UsageError("thresholds must satisfy 0 <= t_pos < t_neg");
  if (distance == Distance::cosine && t_neg > 2.0) throw UsageError("t_neg above 2 is unreachable for cosine distance");
}

void FocalConfig::validate(std::size_t n_categories) const {
  if (!(gamma >= 0.0)) throw UsageError("gamma must be non-negative");
  if (!alpha.empty() && alpha.size() != n_categories) throw DimensionError("alpha length mismatch");
  for (double a : alpha) {
    if (!(a >= 0.0)) throw UsageError("alpha entries must be non-negative");
  }
}

DistanceValue cosine_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) throw DimensionError("cosine distance of vectors with different lengths");
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw DegenerateEmbeddingError("cosine distance of a zero vector");
  const double dot = u.dot(v);
  const double cos = dot / (nu * nv);
  DistanceValue out;
  out.value = 1.0 - cos;
  out.gradient = -(v / (nu * nv) - u * (cos / (nu * nu)));
  return out;
}

DistanceValue distance(Distance kind, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (kind == Distance::cosine) return cosine_distance(u, v);
  if (u.size() != v.size()) throw DimensionError("distance of vectors with different lengths");
  DistanceValue out;
  const Eigen::VectorXd diff = u - v;
  if (kind == Distance::l1) {
    out.value = diff.cwiseAbs().sum();
    out.gradient = diff.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
  } else {
    out.value = diff.norm();
    out.gradient = out.value > 0.0 ? Eigen::VectorXd(diff / out.value) : Eigen::VectorXd::Zero(u.size());
  }
  return out;
}

NegativeSets sample_negatives(std::span<const CategoryId> assignments, std::size_t n_categories,
                              std::size_t n_neg, Rng& rng) {
  if (n_neg == 0 || n_categories < n_neg + 1) {
    throw NegativeSamplingError("cannot draw " + std::to_string(n_neg) + " negatives from " +
                                std::to_string(n_categories) + " categories");
  }
  NegativeSets out;
  out.n_neg = n_neg;
  out.ids.assign(assignments.size() * n_neg, kUnlabeled);
  std::vector<CategoryId> pool(n_categories - 1);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const CategoryId h = assignments[i];
    if (h == kUnlabeled) continue;
    if (h >= n_categories) throw DimensionError("category id " + std::to_string(h) + " out of range");
    for (std::size_t k = 0, c = 0; c < n_categories; ++c) {
      if (c != h) pool[k++] = static_cast<CategoryId>(c);
    }
    // Partial Fisher-Yates.
    for (std::size_t k = 0; k < n_neg; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(pool.size() - k));
      std::swap(pool[k], pool[j]);
      out.ids[i * n_neg + k] = pool[k];
    }
  }
  return out;
}

NegativeSets sample_negatives(std::span<const CategoryId> assignments, const LabelCatalog& catalog,
                              std::size_t n_neg, Rng& rng) {
  return sample_negatives(assignments, catalog.size(), n_neg, rng);
}

LossOutput loss_pos(const Eigen::MatrixXd& features, std::span<const CategoryId> assignments,
                    const Eigen::MatrixXd& anchors, const ContrastiveConfig& cfg) {
  check_rows(features, assignments.size(), "features");
  check_anchor_dims(features, anchors);
  LossOutput out;
  out.gradient = Eigen::MatrixXd::Zero(features.rows(), features.cols());
  const std::size_t labeled = count_labeled(assignments);
  if (labeled == 0) return out;
  const double inv = 1.0 / static_cast<double>(labeled);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const CategoryId h = checked_target(assignments[static_cast<std::size_t>(i)], anchors.rows());
    if (h == kUnlabeled) continue;
    const auto d = distance(cfg.distance, features.row(i).transpose(), anchors.row(h).transpose());
    if (d.value > cfg.t_pos) {
      out.value += d.value - cfg.t_pos;
      out.gradient.row(i) = d.gradient.transpose() * inv;
    }
  }
  out.value *= inv;
  return out;
}

LossOutput loss_neg(const Eigen::MatrixXd& features, std::span<const CategoryId> assignments,
                    const Eigen::MatrixXd& anchors, const NegativeSets& negatives,
                    const ContrastiveConfig& cfg) {
  check_rows(features, assignments.size(), "features");
  check_anchor_dims(features, anchors);
  if (negatives.size() != assignments.size()) throw DimensionError("negative sets do not match point count");
  LossOutput out;
  out.gradient = Eigen::MatrixXd::Zero(features.rows(), features.cols());
  const std::size_t labeled = count_labeled(assignments);
  if (labeled == 0) return out;
  const double inv = 1.0 / static_cast<double>(labeled);
  const double per_neg = 1.0 / static_cast<double>(negatives.n_neg);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const CategoryId h = checked_target(assignments[static_cast<std::size_t>(i)], anchors.rows());
    if (h == kUnlabeled) continue;
    const Eigen::VectorXd f = features.row(i).transpose();
    for (CategoryId j : negatives.of(static_cast<std::size_t>(i))) {
      if (j == h) throw NegativeSamplingError("negative set contains the point's own category");
      checked_target(j, anchors.rows());
      if (j == kUnlabeled) throw NegativeSamplingError("unlabeled id in a negative set");
      const auto d = distance(cfg.distance, f, anchors.row(j).transpose());
      if (d.value < cfg.t_neg) {
        out.value += per_neg * (cfg.t_neg - d.value);
        out.gradient.row(i) -= d.gradient.transpose() * (per_neg * inv);
      }
    }
  }
  out.value *= inv;
  return out;
}

LossOutput loss_total(const Eigen::MatrixXd& features, std::span<const CategoryId> assignments,
                      const Eigen::MatrixXd& anchors, const NegativeSets& negatives,
                      const ContrastiveConfig& cfg) {
  LossOutput out = loss_pos(features, assignments, anchors, cfg);
  if (cfg.lambda == 0.0) return out;
  const LossOutput neg = loss_neg(features, assignments, anchors, negatives, cfg);
  out.value += cfg.lambda * neg.value;
  out.gradient += cfg.lambda * neg.gradient;
  return out;
}

LossOutput cross_entropy(const Eigen::MatrixXd& logits, std::span<const CategoryId> targets) {
  check_rows(logits, targets.size(), "logits");
  if (!logits.allFinite()) throw NumericError("non-finite logits");
  LossOutput out;
  out.gradient = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  const std::size_t labeled = count_labeled(targets);
  if (labeled == 0) return out;
  const double inv = 1.0 / static_cast<double>(labeled);
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const CategoryId t = checked_target(targets[static_cast<std::size_t>(i)], logits.cols());
    if (t == kUnlabeled) continue;
    const double zmax = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - zmax).exp().matrix();
    const double sum = e.sum();
    total += zmax + std::log(sum) - logits(i, t);
    out.gradient.row(i) = e * (inv / sum);
    out.gradient(i, t) -= inv;
  }
  out.value = total * inv;
  return out;
}

LossOutput focal(const Eigen::MatrixXd& logits, std::span<const CategoryId> targets, double gamma) {
  return modulated_ce(logits, targets, gamma, {});
}

LossOutput cfocal(const Eigen::MatrixXd& logits, std::span<const CategoryId> targets, double gamma,
                  std::span<const double> alpha) {
  if (static_cast<Eigen::Index>(alpha.size()) != logits.cols()) {
    throw DimensionError("alpha length " + std::to_string(alpha.size()) + " for " + std::to_string(logits.cols()) +
                         " categories");
  }
  return modulated_ce(logits, targets, gamma, alpha);
}

LossOutput weighted_ce(const Eigen::MatrixXd& logits, std::span<const CategoryId> targets,
                       std::span<const double> weights) {
  if (static_cast<Eigen::Index>(weights.size()) != logits.cols()) {
    throw DimensionError("weight length " + std::to_string(weights.size()) + " for " +
                         std::to_string(logits.cols()) + " categories");
  }
  return modulated_ce(logits, targets, 0.0, weights);
}

ContrastPairs sample_contrast_pairs(std::span<const CategoryId> labels, std::size_t n_pos, std::size_t n_neg,
                                    Rng& rng, std::size_t max_sources) {
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kUnlabeled) labeled.push_back(i);
  }
  ContrastPairs out;
  out.n_pos = n_pos;
  out.n_neg = n_neg;
  if (max_sources != 0 && max_sources < labeled.size()) {
    for (std::size_t k = 0; k < max_sources; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(labeled.size() - k));
      std::swap(labeled[k], labeled[j]);
    }
    out.sources.assign(labeled.begin(), labeled.begin() + static_cast<std::ptrdiff_t>(max_sources));
    std::sort(out.sources.begin(), out.sources.end());
    std::sort(labeled.begin(), labeled.end());
  } else {
    out.sources = labeled;
  }

  std::vector<std::size_t> same;
  std::vector<std::size_t> other;
  for (std::size_t s : out.sources) {
    same.clear();
    other.clear();
    for (std::size_t i : labeled) {
      if (i == s) continue;
      (labels[i] == labels[s] ? same : other).push_back(i);
    }
    if (same.size() < n_pos || other.size() < n_neg) {
      throw NegativeSamplingError("point " + std::to_string(s) + " has too few contrast candidates");
    }
    for (std::size_t k = 0; k < n_pos; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(same.size() - k));
      std::swap(same[k], same[j]);
      out.positives.push_back(same[k]);
    }
    for (std::size_t k = 0; k < n_neg; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(other.size() - k));
      std::swap(other[k], other[j]);
      out.negatives.push_back(other[k]);
    }
  }
  return out;
}

LossOutput supcon_loss(const Eigen::MatrixXd& features, const ContrastPairs& pairs, double temperature) {
  if (!(temperature > 0.0)) throw UsageError("temperature must be positive");
  const Eigen::Index n = features.rows();
  LossOutput out;
  out.gradient = Eigen::MatrixXd::Zero(n, features.cols());
  if (pairs.sources.empty()) return out;

  Eigen::MatrixXd z(n, features.cols());
  Eigen::VectorXd norms(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    norms[i] = features.row(i).norm();
    if (norms[i] == 0.0) throw DegenerateEmbeddingError("zero feature vector in contrastive loss");
    z.row(i) = features.row(i) / norms[i];
  }
  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(n, features.cols());
  const std::size_t m = pairs.n_pos + pairs.n_neg;
  std::vector<std::size_t> others(m);
  std::vector<double> s(m);
  const double inv_src = 1.0 / static_cast<double>(pairs.sources.size());
  for (std::size_t k = 0; k < pairs.sources.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(pairs.sources[k]);
    for (std::size_t a = 0; a < pairs.n_pos; ++a) others[a] = pairs.positives[k * pairs.n_pos + a];
    for (std::size_t a = 0; a < pairs.n_neg; ++a) others[pairs.n_pos + a] = pairs.negatives[k * pairs.n_neg + a];
    double smax = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < m; ++a) {
      s[a] = z.row(i).dot(z.row(static_cast<Eigen::Index>(others[a]))) / temperature;
      smax = std::max(smax, s[a]);
    }
    double sum = 0.0;
    for (std::size_t a = 0; a < m; ++a) sum += std::exp(s[a] - smax);
    const double lse = smax + std::log(sum);
    double li = lse;
    for (std::size_t a = 0; a < pairs.n_pos; ++a) li -= s[a] / static_cast<double>(pairs.n_pos);
    out.value += li * inv_src;
    for (std::size_t a = 0; a < m; ++a) {
      double g = std::exp(s[a] - lse);
      if (a < pairs.n_pos) g -= 1.0 / static_cast<double>(pairs.n_pos);
      g *= inv_src / temperature;
      const auto o = static_cast<Eigen::Index>(others[a]);
      dz.row(i) += g * z.row(o);
      dz.row(o) += g * z.row(i);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    out.gradient.row(i) = (dz.row(i) - z.row(i) * z.row(i).dot(dz.row(i))) / norms[i];
  }
  if (!std::isfinite(out.value)) throw NumericError("non-finite contrastive loss");
  return out;
}

LossOutput supcon(const Eigen::MatrixXd& features, std::span<const CategoryId> labels, std::size_t n_pos,
                  std::size_t n_neg, double temperature, Rng& rng) {
  check_rows(features, labels.size(), "features");
  return supcon_loss(features, sample_contrast_pairs(labels, n_pos, n_neg, rng), temperature);
}

}  // namespace lgseg
