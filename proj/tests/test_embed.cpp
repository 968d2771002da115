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

#include "lgseg/embed.hpp"
#include "lgseg/error.hpp"
#include "oracles.hpp"

using namespace lgseg;

namespace {

Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, 1.0);
  return m;
}

LabelCatalog named(std::vector<std::string> names) {
  std::vector<CategoryRecord> r;
  for (std::size_t i = 0; i < names.size(); ++i) r.push_back({static_cast<CategoryId>(i), names[i], 2, 2});
  return LabelCatalog(std::move(r));
}

}  // namespace

TEST_CASE("normalized") {
  Eigen::VectorXd v(3);
  v << 3, 0, 4;
  const Eigen::VectorXd u = normalized(v);
  CHECK(u(0) == doctest::Approx(0.6));
  CHECK(u(2) == doctest::Approx(0.8));
  CHECK(normalized(u) == u);
  CHECK_THROWS_AS(normalized(Eigen::VectorXd::Zero(3)), DegenerateEmbeddingError);
}

TEST_CASE("load_table reorders and normalizes") {
  Rng rng(4);
  RawEmbeddings raw;
  raw.names = {"lamp", "chair", "desk"};
  raw.vectors = gaussian(rng, 3, 8).cast<float>().cast<double>();
  const auto cat = named({"chair", "desk", "lamp"});
  const EmbeddingTable t = load_table(raw, cat);
  CHECK(t.dim() == 8);
  CHECK(t.names == cat.names());
  for (Eigen::Index r = 0; r < 3; ++r) CHECK(t.rows.row(r).norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((t.rows.row(2) - raw.vectors.row(0).normalized()).norm() < 1e-12);

  RawEmbeddings scaled = raw;
  scaled.vectors.row(1) *= 5.0;
  CHECK((load_table(scaled, cat).rows - t.rows).norm() < 1e-12);

  RawEmbeddings missing = raw;
  missing.names[0] = "sofa";
  CHECK_THROWS_AS(load_table(missing, cat), EmbeddingCoverageError);
  RawEmbeddings zero = raw;
  zero.vectors.row(1).setZero();
  CHECK_THROWS_AS(load_table(zero, cat), DegenerateEmbeddingError);
}

TEST_CASE("load_table keeps a 512-wide table") {
  Rng rng(5);
  std::vector<std::string> names;
  for (int i = 0; i < 200; ++i) names.push_back("category " + std::to_string(i));
  RawEmbeddings raw{names, gaussian(rng, 200, 512).cast<float>().cast<double>()};
  CHECK(load_table(raw, named(names)).dim() == 512);
}

TEST_CASE("pca eigenvalues match a Jacobi decomposition") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + rng.below(9));
    const auto dim = static_cast<Eigen::Index>(1 + rng.below(5));
    const Eigen::MatrixXd x = gaussian(rng, n, dim);
    const auto d = static_cast<std::size_t>(1 + rng.below(static_cast<std::uint64_t>(std::min(n, dim))));
    const PcaModel m = fit_pca(x, d);
    const Eigen::VectorXd ev = oracle::jacobi_eigenvalues(oracle::sample_covariance(x));
    for (std::size_t k = 0; k < d; ++k) CHECK(std::abs(m.variances(static_cast<Eigen::Index>(k)) - ev(static_cast<Eigen::Index>(k))) < 1e-8);
    CHECK(m.total_variance == doctest::Approx(ev.sum()).epsilon(1e-10));
    const Eigen::MatrixXd gram = m.basis.transpose() * m.basis;
    CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-8);
    for (Eigen::Index k = 1; k < m.variances.size(); ++k) CHECK(m.variances(k) <= m.variances(k - 1));
  }
}

TEST_CASE("pca special cases") {
  // Points on a line.
  Eigen::MatrixXd line(5, 2);
  for (int i = 0; i < 5; ++i) line.row(i) << 2.0 * i + 1.0, -1.0 * i;
  CHECK(std::abs(fit_pca(line, 1).retained_variance_ratio() - 1.0) < 1e-9);

  Rng rng(7);
  const Eigen::MatrixXd x = gaussian(rng, 6, 9);
  const PcaModel full = fit_pca(x, 6);
  CHECK((reconstruct_rows(full, project_rows(full, x)) - x).cwiseAbs().maxCoeff() < 1e-6);

  CHECK_THROWS_AS(fit_pca(x, 0), PcaRankError);
  CHECK_THROWS_AS(fit_pca(x, 7), PcaRankError);
}

TEST_CASE("pca projections keep requested widths") {
  Rng rng(8);
  std::vector<std::string> names;
  for (int i = 0; i < 520; ++i) names.push_back("c" + std::to_string(i));
  EmbeddingTable big{names, gaussian(rng, 520, 768), EmbeddingSource::clip};
  for (Eigen::Index r = 0; r < big.rows.rows(); ++r) big.rows.row(r).normalize();
  const EmbeddingTable p512 = project(fit_pca(big, 512), big);
  CHECK(p512.dim() == 512);

  const EmbeddingTable p96 = project(fit_pca(p512, 96), p512);
  CHECK(p96.dim() == 96);
  for (Eigen::Index r = 0; r < p96.rows.rows(); ++r) CHECK(p96.rows.row(r).norm() == doctest::Approx(1.0));

  EmbeddingTable twins = big;
  twins.rows.row(1) = twins.rows.row(0);
  const EmbeddingTable pt = project(fit_pca(twins, 16), twins);
  CHECK(pt.rows.row(0) == pt.rows.row(1));
}

TEST_CASE("pca with the identity basis only re-normalizes") {
  // Centered data whose covariance is diagonal with distinct variances gives
  // the identity basis.
  Eigen::MatrixXd x(4, 2);
  x << 3, 1, -3, 1, 3, -1, -3, -1;
  EmbeddingTable t{{"a", "b", "c", "d"}, x, EmbeddingSource::synthetic};
  const PcaModel m = fit_pca(t, 2);
  CHECK((m.basis.cwiseAbs() - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
  const EmbeddingTable p = project(m, t);
  for (Eigen::Index r = 0; r < 4; ++r) {
    CHECK((p.rows.row(r).cwiseAbs() - x.row(r).normalized().cwiseAbs()).norm() < 1e-12);
  }
}

TEST_CASE("synthetic anchors") {
  const EmbeddingTable a = synthetic_anchors(20, 64, 1);
  CHECK(a.size() == 20);
  const Eigen::MatrixXd gram = a.rows * a.rows.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(synthetic_anchors(20, 64, 1).rows == a.rows);
  CHECK(synthetic_anchors(20, 64, 2).rows != a.rows);

  const EmbeddingTable crowded = synthetic_anchors(100, 16, 3);
  const Eigen::MatrixXd g = crowded.rows * crowded.rows.transpose();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < 100; ++i) {
    CHECK(g(i, i) == doctest::Approx(1.0).epsilon(1e-12));
    for (Eigen::Index j = 0; j < i; ++j) worst = std::max(worst, std::abs(g(i, j)));
  }
  CHECK(worst < 1.0);
}
