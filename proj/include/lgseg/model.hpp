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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lgseg/binary_io.hpp"
#include "lgseg/rng.hpp"
#include "lgseg/scene.hpp"
#include "lgseg/voxel.hpp"

namespace lgseg {

// Centered coordinates (3), mean color (3), height above the scene floor (1).
inline constexpr std::size_t kFeatureDim = 7;

// Normalization frame of a scene: point centroid, largest AABB side, lowest z.
struct SceneFrame {
  std::array<double, 3> centroid{};
  double scale = 1.0;
  double floor = 0.0;
};
SceneFrame scene_frame(const Scene& scene);

// Feature row of one cell given its center (meters) and mean color (0-255).
void cell_features(const SceneFrame& frame, const std::array<double, 3>& center,
                   const std::array<double, 3>& mean_color, bool use_color, double* out);

// Per-cell inputs, one row per grid cell. Coordinates are centered on the
// point centroid and divided by the largest AABB side; colors are in [0, 1]
// (all zero when use_color is off); height is in meters above the lowest point.
Eigen::MatrixXd point_features(const SparseVoxelGrid& grid, const Scene& scene, bool use_color);

// y = x W + b, rows are cells.
struct DenseLayer {
  Eigen::MatrixXd weight;  // in x out
  Eigen::RowVectorXd bias;

  bool operator==(const DenseLayer& o) const { return weight == o.weight && bias == o.bias; }
};

// Rectifier between layers, identity on the last one.
struct EncoderParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.rows()); }
  std::size_t output_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.cols()); }
  bool operator==(const EncoderParams&) const = default;
};

struct ClassifierHead {
  Eigen::MatrixXd weight;  // N x D
  Eigen::VectorXd bias;    // N

  std::size_t categories() const { return static_cast<std::size_t>(weight.rows()); }
  bool operator==(const ClassifierHead& o) const { return weight == o.weight && bias == o.bias; }
};

struct EncoderShape {
  std::size_t input = kFeatureDim;
  std::size_t hidden = 64;
  std::size_t output = 64;
  std::size_t hidden_layers = 2;
};

// He-normal weights, zero biases.
EncoderParams init_encoder(const EncoderShape& shape, Rng& rng);
// Weights Gaussian(0, 1/sqrt(D)), zero biases.
ClassifierHead init_head(std::size_t n_categories, std::size_t dim, Rng& rng);

// Layer inputs kept for the backward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;
};

// Throws DimensionError when the feature width differs from the input width.
Eigen::MatrixXd encode(const EncoderParams& params, const Eigen::MatrixXd& features);
Eigen::MatrixXd encode(const EncoderParams& params, const Eigen::MatrixXd& features, ForwardCache& cache);
// Parameter gradients (same shapes as params) for upstream d loss / d output.
EncoderParams encode_backward(const EncoderParams& params, const ForwardCache& cache,
                              const Eigen::MatrixXd& grad_output);

Eigen::MatrixXd head_logits(const ClassifierHead& head, const Eigen::MatrixXd& features);
// Head gradients plus d loss / d features.
struct HeadGradients {
  ClassifierHead head;
  Eigen::MatrixXd features;
};
HeadGradients head_backward(const ClassifierHead& head, const Eigen::MatrixXd& features,
                            const Eigen::MatrixXd& grad_logits);

// Index of the row maximum; ties resolve to the lowest index.
std::vector<CategoryId> argmax_rows(const Eigen::MatrixXd& scores);

struct SgdState {
  std::vector<Eigen::MatrixXd> velocity;
};

// v <- momentum v + g; p <- p - lr v. Throws NumericError on a non-finite
// gradient (parameters are left untouched) and DimensionError on mismatched
// shapes.
void sgd_step(EncoderParams& params, const EncoderParams& grads, SgdState& state, double lr, double momentum);
void sgd_step(ClassifierHead& params, const ClassifierHead& grads, SgdState& state, double lr, double momentum);

// Named f64 tensors; CKPT: "CKPT", u32 version=1, then per tensor u16 name
// length, UTF-8 name, u8 rank, rank x u32 dims, row-major f64 payload. The
// first stored tensor is a rank-0 "tensor_count" holding the number of tensors
// after it, so a file cut between two tensors is rejected.
struct Tensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;

  bool operator==(const Tensor&) const = default;
};

Bytes encode_checkpoint(const std::vector<Tensor>& tensors);
std::vector<Tensor> decode_checkpoint(std::span<const std::uint8_t> bytes);

struct Checkpoint {
  EncoderParams encoder;
  std::optional<ClassifierHead> head;

  bool operator==(const Checkpoint&) const = default;
};

std::vector<Tensor> to_tensors(const Checkpoint& ckpt);
Checkpoint from_tensors(const std::vector<Tensor>& tensors);
std::size_t write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace lgseg
