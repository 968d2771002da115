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

#include "lgseg/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "lgseg/error.hpp"

namespace lgseg {
namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::string_view kTensorCountName = "tensor_count";

// Visits (parameter, gradient) pairs in a fixed order.
template <typename F>
void zip_tensors(EncoderParams& p, const EncoderParams& g, F&& f) {
  if (p.layers.size() != g.layers.size()) throw DimensionError("gradient layer count mismatch");
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    f(p.layers[l].weight, g.layers[l].weight);
    f(p.layers[l].bias, g.layers[l].bias);
  }
}

template <typename F>
void zip_tensors(ClassifierHead& p, const ClassifierHead& g, F&& f) {
  f(p.weight, g.weight);
  f(p.bias, g.bias);
}

template <typename P>
void momentum_step(P& params, const P& grads, SgdState& state, double lr, double momentum) {
  std::size_t n = 0;
  bool finite = true;
  zip_tensors(params, grads, [&](auto& p, const auto& g) {
    if (p.rows() != g.rows() || p.cols() != g.cols()) throw DimensionError("gradient shape mismatch");
    finite = finite && g.allFinite();
    ++n;
  });
  if (!finite) throw NumericError("non-finite gradient");
  if (state.velocity.size() != n) {
    state.velocity.clear();
    zip_tensors(params, grads, [&](auto& p, const auto&) {
      state.velocity.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    });
  }
  std::size_t k = 0;
  zip_tensors(params, grads, [&](auto& p, const auto& g) {
    Eigen::MatrixXd& v = state.velocity[k++];
    if (v.rows() != p.rows() || v.cols() != p.cols()) throw DimensionError("optimizer state shape mismatch");
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      v.data()[i] = momentum * v.data()[i] + g.data()[i];
      p.data()[i] -= lr * v.data()[i];
    }
  });
}

Tensor matrix_tensor(std::string name, const Eigen::MatrixXd& m) {
  Tensor t{std::move(name), {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())}, {}};
  t.values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.values.push_back(m(r, c));
  }
  return t;
}

template <typename V>
Tensor vector_tensor(std::string name, const V& v) {
  Tensor t{std::move(name), {static_cast<std::uint32_t>(v.size())}, {}};
  t.values.assign(v.data(), v.data() + v.size());
  return t;
}

Eigen::MatrixXd tensor_matrix(const Tensor& t) {
  if (t.dims.size() != 2) throw FormatError("tensor '" + t.name + "' is not a matrix");
  Eigen::MatrixXd m(t.dims[0], t.dims[1]);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.values[static_cast<std::size_t>(r * m.cols() + c)];
  }
  return m;
}

Eigen::VectorXd tensor_vector(const Tensor& t) {
  if (t.dims.size() != 1) throw FormatError("tensor '" + t.name + "' is not a vector");
  return Eigen::Map<const Eigen::VectorXd>(t.values.data(), static_cast<Eigen::Index>(t.values.size()));
}

}  // namespace

SceneFrame scene_frame(const Scene& scene) {
  SceneFrame f;
  if (scene.points.empty()) return f;
  for (const auto& p : scene.points) {
    for (int a = 0; a < 3; ++a) f.centroid[a] += p.position[a];
  }
  for (double& c : f.centroid) c /= static_cast<double>(scene.points.size());
  const Aabb box = bounds(scene);
  const Vec3 ext = box.extent();
  f.scale = std::max({ext.x, ext.y, ext.z});
  if (!(f.scale > 0.0)) f.scale = 1.0;
  f.floor = box.min.z;
  return f;
}

void cell_features(const SceneFrame& frame, const std::array<double, 3>& center,
                   const std::array<double, 3>& mean_color, bool use_color, double* out) {
  for (int a = 0; a < 3; ++a) out[a] = (center[a] - frame.centroid[a]) / frame.scale;
  for (int a = 0; a < 3; ++a) out[3 + a] = use_color ? mean_color[a] / 255.0 : 0.0;
  out[6] = center[2] - frame.floor;
}

Eigen::MatrixXd point_features(const SparseVoxelGrid& grid, const Scene& scene, bool use_color) {
  // Row-major so each cell's features are contiguous.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(
      static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(kFeatureDim));
  const SceneFrame frame = scene_frame(scene);
  for (std::size_t c = 0; c < grid.size(); ++c) {
    cell_features(frame, grid.center(c), grid.aggregates()[c].mean_color, use_color,
                  out.data() + c * kFeatureDim);
  }
  return out;
}

EncoderParams init_encoder(const EncoderShape& shape, Rng& rng) {
  if (shape.input == 0 || shape.hidden == 0 || shape.output == 0) throw UsageError("encoder widths must be positive");
  std::vector<std::size_t> widths{shape.input};
  for (std::size_t i = 0; i < shape.hidden_layers; ++i) widths.push_back(shape.hidden);
  widths.push_back(shape.output);
  EncoderParams params;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    const auto in = static_cast<Eigen::Index>(widths[l]);
    const auto out = static_cast<Eigen::Index>(widths[l + 1]);
    const double sd = std::sqrt(2.0 / static_cast<double>(in));
    layer.weight.resize(in, out);
    for (Eigen::Index c = 0; c < out; ++c) {
      for (Eigen::Index r = 0; r < in; ++r) layer.weight(r, c) = rng.normal(0.0, sd);
    }
    layer.bias = Eigen::RowVectorXd::Zero(out);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

ClassifierHead init_head(std::size_t n_categories, std::size_t dim, Rng& rng) {
  ClassifierHead head;
  const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
  head.weight.resize(static_cast<Eigen::Index>(n_categories), static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < head.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < head.weight.cols(); ++c) head.weight(r, c) = rng.normal(0.0, sd);
  }
  head.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_categories));
  return head;
}

Eigen::MatrixXd encode(const EncoderParams& params, const Eigen::MatrixXd& features, ForwardCache& cache) {
  if (params.layers.empty()) throw DimensionError("encoder has no layers");
  if (static_cast<std::size_t>(features.cols()) != params.input_dim()) {
    throw DimensionError("feature width " + std::to_string(features.cols()) + ", encoder expects " +
                         std::to_string(params.input_dim()));
  }
  cache.inputs.clear();
  Eigen::MatrixXd x = features;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Eigen::MatrixXd y = x * layer.weight;
    y.rowwise() += layer.bias;
    if (l + 1 < params.layers.size()) y = y.cwiseMax(0.0);
    cache.inputs.push_back(std::move(x));
    x = std::move(y);
  }
  return x;
}

Eigen::MatrixXd encode(const EncoderParams& params, const Eigen::MatrixXd& features) {
  ForwardCache cache;
  return encode(params, features, cache);
}

EncoderParams encode_backward(const EncoderParams& params, const ForwardCache& cache,
                              const Eigen::MatrixXd& grad_output) {
  if (cache.inputs.size() != params.layers.size()) throw DimensionError("forward cache does not match encoder");
  EncoderParams grads;
  grads.layers.resize(params.layers.size());
  Eigen::MatrixXd g = grad_output;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const auto& x = cache.inputs[l];
    grads.layers[l].weight = x.transpose() * g;
    grads.layers[l].bias = g.colwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd gx = g * params.layers[l].weight.transpose();
    // x is the rectified output of the previous layer.
    g = (x.array() > 0.0).select(gx, 0.0);
  }
  return grads;
}

Eigen::MatrixXd head_logits(const ClassifierHead& head, const Eigen::MatrixXd& features) {
  if (features.cols() != head.weight.cols()) throw DimensionError("head input width mismatch");
  Eigen::MatrixXd logits = features * head.weight.transpose();
  logits.rowwise() += head.bias.transpose();
  return logits;
}

HeadGradients head_backward(const ClassifierHead& head, const Eigen::MatrixXd& features,
                            const Eigen::MatrixXd& grad_logits) {
  HeadGradients out;
  out.head.weight = grad_logits.transpose() * features;
  out.head.bias = grad_logits.colwise().sum().transpose();
  out.features = grad_logits * head.weight;
  return out;
}

std::vector<CategoryId> argmax_rows(const Eigen::MatrixXd& scores) {
  std::vector<CategoryId> out(static_cast<std::size_t>(scores.rows()), kUnlabeled);
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(r, c) > scores(r, best)) best = c;
    }
    if (scores.cols() > 0) out[static_cast<std::size_t>(r)] = static_cast<CategoryId>(best);
  }
  return out;
}

void sgd_step(EncoderParams& params, const EncoderParams& grads, SgdState& state, double lr, double momentum) {
  momentum_step(params, grads, state, lr, momentum);
}

void sgd_step(ClassifierHead& params, const ClassifierHead& grads, SgdState& state, double lr, double momentum) {
  momentum_step(params, grads, state, lr, momentum);
}

Bytes encode_checkpoint(const std::vector<Tensor>& tensors) {
  ByteWriter w;
  w.raw("CKPT");
  w.u32(kCheckpointVersion);
  std::vector<const Tensor*> all;
  const Tensor count{std::string(kTensorCountName), {}, {static_cast<double>(tensors.size())}};
  all.push_back(&count);
  for (const auto& t : tensors) {
    if (t.name == kTensorCountName) throw DimensionError("tensor name '" + t.name + "' is reserved");
    all.push_back(&t);
  }
  for (const Tensor* tp : all) {
    const Tensor& t = *tp;
    if (t.name.size() > 0xFFFF) throw DimensionError("tensor name too long");
    if (t.dims.size() > 0xFF) throw DimensionError("tensor rank too large");
    std::size_t count = 1;
    for (auto d : t.dims) count *= d;
    if (count != t.values.size()) throw DimensionError("tensor '" + t.name + "' payload does not match its dims");
    w.u16(static_cast<std::uint16_t>(t.name.size()));
    w.raw(t.name);
    w.u8(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) w.u32(d);
    for (double v : t.values) w.f64(v);
  }
  return w.take();
}

std::vector<Tensor> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.raw(4) != "CKPT") throw FormatError("bad checkpoint magic");
  const auto version = r.u32();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  std::vector<Tensor> out;
  while (!r.done()) {
    Tensor t;
    t.name = r.raw(r.u16());
    const auto rank = r.u8();
    std::size_t count = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
      t.dims.push_back(r.u32());
      count *= t.dims.back();
    }
    if (count > r.remaining() / 8) throw FormatError("tensor '" + t.name + "' truncated");
    t.values.resize(count);
    for (auto& v : t.values) v = r.f64();
    out.push_back(std::move(t));
  }
  if (out.empty() || out.front().name != kTensorCountName || !out.front().dims.empty()) {
    throw FormatError("checkpoint lacks its tensor count");
  }
  const double expected = out.front().values.front();
  if (expected != static_cast<double>(out.size() - 1)) {
    throw FormatError("checkpoint truncated: holds " + std::to_string(out.size() - 1) + " of its declared tensors");
  }
  out.erase(out.begin());
  return out;
}

std::vector<Tensor> to_tensors(const Checkpoint& ckpt) {
  std::vector<Tensor> out;
  for (std::size_t l = 0; l < ckpt.encoder.layers.size(); ++l) {
    const std::string prefix = "encoder." + std::to_string(l);
    out.push_back(matrix_tensor(prefix + ".weight", ckpt.encoder.layers[l].weight));
    out.push_back(vector_tensor(prefix + ".bias", ckpt.encoder.layers[l].bias));
  }
  if (ckpt.head) {
    out.push_back(matrix_tensor("head.weight", ckpt.head->weight));
    out.push_back(vector_tensor("head.bias", ckpt.head->bias));
  }
  return out;
}

Checkpoint from_tensors(const std::vector<Tensor>& tensors) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& t : tensors) {
    if (!by_name.emplace(t.name, &t).second) throw FormatError("duplicate tensor '" + t.name + "'");
  }
  auto get = [&](const std::string& name) -> const Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint lacks tensor '" + name + "'");
    return *it->second;
  };
  Checkpoint ckpt;
  for (std::size_t l = 0; by_name.count("encoder." + std::to_string(l) + ".weight"); ++l) {
    const std::string prefix = "encoder." + std::to_string(l);
    DenseLayer layer;
    layer.weight = tensor_matrix(get(prefix + ".weight"));
    layer.bias = tensor_vector(get(prefix + ".bias")).transpose();
    if (layer.bias.size() != layer.weight.cols()) throw FormatError(prefix + " bias does not match its weight");
    if (!ckpt.encoder.layers.empty() && ckpt.encoder.layers.back().weight.cols() != layer.weight.rows()) {
      throw FormatError(prefix + " input width does not match the previous layer");
    }
    ckpt.encoder.layers.push_back(std::move(layer));
  }
  if (ckpt.encoder.layers.empty()) throw FormatError("checkpoint holds no encoder layers");
  if (by_name.count("head.weight")) {
    ClassifierHead head;
    head.weight = tensor_matrix(get("head.weight"));
    head.bias = tensor_vector(get("head.bias"));
    if (head.bias.size() != head.weight.rows() ||
        static_cast<std::size_t>(head.weight.cols()) != ckpt.encoder.output_dim()) {
      throw FormatError("head shape does not match the encoder");
    }
    ckpt.head = std::move(head);
  }
  return ckpt;
}

std::size_t write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const Bytes bytes = encode_checkpoint(to_tensors(ckpt));
  write_file(path, bytes);
  return bytes.size();
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return from_tensors(decode_checkpoint(read_file(path)));
}

}  // namespace lgseg
