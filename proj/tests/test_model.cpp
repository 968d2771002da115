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

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "lgseg/error.hpp"
#include "lgseg/model.hpp"
#include "lgseg/voxel.hpp"

using namespace lgseg;
using gradcheck::gaussian;

namespace {

// Coordinates on a 1/1024 grid so that shifting by multiples of 0.25 is exact
// in float.
Scene quantized_scene(Rng& rng, std::size_t n) {
  Scene s = fixture::random_scene(rng, n, 5, 4);
  for (auto& p : s.points)
    for (auto& c : p.position) c = std::round(c * 1024.0f) / 1024.0f;
  return s;
}

}  // namespace

TEST_CASE("point features") {
  Rng rng(1);
  const Scene s = quantized_scene(rng, 2000);
  const SparseVoxelGrid g = voxelize(s, 0.25);
  const Eigen::MatrixXd with = point_features(g, s, true);
  const Eigen::MatrixXd without = point_features(g, s, false);
  CHECK(with.cols() == 7);
  CHECK(static_cast<std::size_t>(with.rows()) == g.size());
  CHECK(without.middleCols(3, 3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(with.middleCols(3, 3).maxCoeff() <= 1.0);
  CHECK(with.middleCols(3, 3).minCoeff() >= 0.0);
  CHECK(with.leftCols(3) == without.leftCols(3));
  CHECK(with.col(6).minCoeff() >= 0.0);

  Scene moved = s;
  for (auto& p : moved.points) {
    p.position[0] += 1.5f;
    p.position[1] -= 2.25f;
    p.position[2] += 0.75f;
  }
  const Eigen::MatrixXd shifted = point_features(voxelize(moved, 0.25), moved, true);
  REQUIRE(shifted.rows() == with.rows());
  CHECK((shifted - with).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("encoder forward") {
  Rng rng(2);
  EncoderShape shape;
  shape.hidden = 8;
  shape.output = 5;
  EncoderParams p = init_encoder(shape, rng);
  const Eigen::MatrixXd x = gaussian(rng, 12, 7);

  const Eigen::MatrixXd batched = encode(p, x);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    CHECK((encode(p, x.row(r)) - batched.row(r)).cwiseAbs().maxCoeff() < 1e-12);
  }

  EncoderParams zero = p;
  for (auto& l : zero.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  CHECK(encode(zero, x).cwiseAbs().maxCoeff() == 0.0);

  EncoderParams identity;
  for (int l = 0; l < 3; ++l) identity.layers.push_back({Eigen::MatrixXd::Ones(1, 1), Eigen::RowVectorXd::Zero(1)});
  const Eigen::MatrixXd one = (Eigen::MatrixXd(1, 1) << 0.37).finished();
  CHECK(encode(identity, one)(0, 0) == 0.37);

  CHECK_THROWS_AS(encode(p, gaussian(rng, 3, 6)), DimensionError);
}

TEST_CASE("He initialisation scale") {
  Rng rng(3);
  EncoderShape shape;
  shape.hidden = 256;
  shape.output = 256;
  const EncoderParams p = init_encoder(shape, rng);
  const Eigen::MatrixXd& w = p.layers[1].weight;
  const double var = w.squaredNorm() / static_cast<double>(w.size());
  CHECK(var == doctest::Approx(2.0 / 256.0).epsilon(0.05));
  CHECK(p.layers[1].bias.cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.layers.size() == 3);
}

TEST_CASE("end-to-end encoder gradient") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) CHECK(gradcheck::end_to_end_error(rng) < 1e-3);
}

TEST_CASE("sgd step") {
  Rng rng(5);
  ClassifierHead p = init_head(3, 4, rng);
  SgdState state;
  const ClassifierHead g = p;
  sgd_step(p, g, state, 1.0, 0.0);
  CHECK(p.weight.cwiseAbs().maxCoeff() == 0.0);

  ClassifierHead q = init_head(3, 4, rng);
  const ClassifierHead before = q;
  ClassifierHead zero = q;
  zero.weight.setZero();
  zero.bias.setZero();
  SgdState s0;
  sgd_step(q, zero, s0, 0.1, 0.9);
  CHECK(q == before);

  // v1 = g, p1 = p0 - lr g; v2 = 0.9 g + g, p2 = p1 - lr 1.9 g.
  ClassifierHead r = before;
  ClassifierHead grad = before;
  grad.weight.setConstant(0.5);
  grad.bias.setConstant(-1.0);
  SgdState s1;
  sgd_step(r, grad, s1, 0.1, 0.9);
  sgd_step(r, grad, s1, 0.1, 0.9);
  CHECK((r.weight - (before.weight.array() - 0.1 * 0.5 - 0.1 * 1.9 * 0.5).matrix()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((r.bias - (before.bias.array() + 0.1 + 0.19).matrix()).cwiseAbs().maxCoeff() < 1e-15);

  ClassifierHead nan = grad;
  nan.weight(0, 0) = std::numeric_limits<double>::quiet_NaN();
  ClassifierHead untouched = r;
  CHECK_THROWS_AS(sgd_step(untouched, nan, s1, 0.1, 0.9), NumericError);
  CHECK(untouched == r);
}

TEST_CASE("argmax ties") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 9);
  s(0, 3) = s(0, 7) = 1.0;
  s(1, 8) = 2.0;
  CHECK(argmax_rows(s) == std::vector<CategoryId>{3, 8});
}
