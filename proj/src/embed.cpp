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

#include "lgseg/embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "lgseg/error.hpp"
#include "lgseg/rng.hpp"

namespace lgseg {
namespace {

constexpr double kUnitTolerance = 1e-12;

}  // namespace

std::string_view to_string(EmbeddingSource source) {
  switch (source) {
    case EmbeddingSource::clip:
      return "clip";
    case EmbeddingSource::bert:
      return "bert";
    case EmbeddingSource::gpt2:
      return "gpt2";
    case EmbeddingSource::synthetic:
      return "synthetic";
  }
  return "synthetic";
}

EmbeddingSource parse_embedding_source(std::string_view text) {
  if (text == "clip") return EmbeddingSource::clip;
  if (text == "bert") return EmbeddingSource::bert;
  if (text == "gpt2") return EmbeddingSource::gpt2;
  if (text == "synthetic") return EmbeddingSource::synthetic;
  throw UsageError("unknown embedding source '" + std::string(text) + "'");
}

Bytes encode_embeddings(const RawEmbeddings& raw) {
  if (raw.names.size() != static_cast<std::size_t>(raw.vectors.rows())) {
    throw DimensionError("EMB1: name count does not match row count");
  }
  ByteWriter out;
  out.raw("EMB1");
  out.u32(static_cast<std::uint32_t>(raw.vectors.rows()));
  out.u32(static_cast<std::uint32_t>(raw.vectors.cols()));
  for (Eigen::Index r = 0; r < raw.vectors.rows(); ++r) {
    const auto& name = raw.names[static_cast<std::size_t>(r)];
    if (name.size() > 0xFFFF) throw FormatError("EMB1: name longer than 65535 bytes");
    out.u16(static_cast<std::uint16_t>(name.size()));
    out.raw(name);
    for (Eigen::Index c = 0; c < raw.vectors.cols(); ++c) out.f32(static_cast<float>(raw.vectors(r, c)));
  }
  return out.take();
}

RawEmbeddings decode_embeddings(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (in.remaining() < 4 || in.raw(4) != "EMB1") throw FormatError("bad magic: expected 'EMB1'");
  const auto count = in.u32();
  const auto dim = in.u32();
  RawEmbeddings raw;
  raw.vectors.resize(count, dim);
  raw.names.reserve(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto len = in.u16();
    raw.names.push_back(in.raw(len));
    for (std::uint32_t c = 0; c < dim; ++c) raw.vectors(r, c) = in.f32();
  }
  if (!in.done()) throw FormatError("EMB1: trailing bytes after " + std::to_string(count) + " rows");
  return raw;
}

std::size_t write_embeddings(const std::filesystem::path& path, const RawEmbeddings& raw) {
  return write_file(path, encode_embeddings(raw));
}

RawEmbeddings read_embeddings(const std::filesystem::path& path) { return decode_embeddings(read_file(path)); }

RawEmbeddings to_raw(const EmbeddingTable& table) {
  RawEmbeddings raw{table.names, table.rows};
  // EMB1 stores f32; keep the in-memory payload consistent with the file.
  raw.vectors = raw.vectors.cast<float>().cast<double>();
  return raw;
}

Eigen::VectorXd normalized(const Eigen::VectorXd& x) {
  const double n = x.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateEmbeddingError("cannot normalize a zero or non-finite vector");
  if (std::abs(n - 1.0) <= kUnitTolerance) return x;
  return x / n;
}

EmbeddingTable load_table(const RawEmbeddings& raw, const LabelCatalog& catalog, EmbeddingSource source) {
  std::unordered_map<std::string, std::size_t> by_name;
  for (std::size_t r = 0; r < raw.names.size(); ++r) by_name.emplace(canonical_label(raw.names[r]), r);
  EmbeddingTable table;
  table.source = source;
  table.rows.resize(static_cast<Eigen::Index>(catalog.size()), raw.vectors.cols());
  for (const auto& rec : catalog.records()) {
    auto it = by_name.find(canonical_label(rec.name));
    if (it == by_name.end()) throw EmbeddingCoverageError("no embedding for category '" + rec.name + "'");
    Eigen::VectorXd row = raw.vectors.row(static_cast<Eigen::Index>(it->second)).transpose();
    if (!(row.norm() > 0.0)) throw DegenerateEmbeddingError("zero embedding for category '" + rec.name + "'");
    table.rows.row(rec.id) = normalized(row).transpose();
    table.names.push_back(rec.name);
  }
  return table;
}

EmbeddingTable load_table(const std::filesystem::path& path, const LabelCatalog& catalog, EmbeddingSource source) {
  return load_table(read_embeddings(path), catalog, source);
}

double PcaModel::retained_variance_ratio() const {
  if (!(total_variance > 0.0)) return 1.0;
  return variances.sum() / total_variance;
}

PcaModel fit_pca(const Eigen::MatrixXd& data, std::size_t d) {
  const auto n = static_cast<std::size_t>(data.rows());
  const auto dim = static_cast<std::size_t>(data.cols());
  if (d == 0 || d > std::min(n, dim)) {
    throw PcaRankError("PCA rank " + std::to_string(d) + " outside [1, " + std::to_string(std::min(n, dim)) + "]");
  }
  PcaModel model;
  model.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("PCA eigendecomposition failed");
  // Eigen sorts ascending; take the d largest.
  model.basis.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(d));
  model.variances.resize(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < d; ++k) {
    const auto src = static_cast<Eigen::Index>(dim - 1 - k);
    Eigen::VectorXd col = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
    model.basis.col(static_cast<Eigen::Index>(k)) = col;
    model.variances(static_cast<Eigen::Index>(k)) = std::max(0.0, eig.eigenvalues()(src));
  }
  model.total_variance = std::max(0.0, cov.trace());
  return model;
}

PcaModel fit_pca(const EmbeddingTable& table, std::size_t d) { return fit_pca(table.rows, d); }

Eigen::MatrixXd project_rows(const PcaModel& model, const Eigen::MatrixXd& data) {
  if (static_cast<std::size_t>(data.cols()) != model.input_dim()) {
    throw DimensionError("PCA input dim " + std::to_string(model.input_dim()) + " vs data dim " +
                         std::to_string(data.cols()));
  }
  return (data.rowwise() - model.mean.transpose()) * model.basis;
}

Eigen::MatrixXd reconstruct_rows(const PcaModel& model, const Eigen::MatrixXd& projected) {
  return (projected * model.basis.transpose()).rowwise() + model.mean.transpose();
}

EmbeddingTable project(const PcaModel& model, const EmbeddingTable& table) {
  const Eigen::MatrixXd p = project_rows(model, table.rows);
  EmbeddingTable out;
  out.names = table.names;
  out.source = table.source;
  out.rows.resize(p.rows(), p.cols());
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    Eigen::VectorXd row = p.row(r).transpose();
    if (!(row.norm() > 0.0)) {
      throw DegenerateEmbeddingError("category '" + table.names[static_cast<std::size_t>(r)] +
                                     "' projects to the zero vector");
    }
    out.rows.row(r) = normalized(row).transpose();
  }
  return out;
}

EmbeddingTable synthetic_anchors(std::size_t n, std::size_t d, std::uint64_t seed, std::vector<std::string> names) {
  if (d == 0) throw DimensionError("synthetic anchors need d >= 1");
  auto rng = Rng::substream(seed, "embed/synthetic-anchors");
  EmbeddingTable table;
  table.source = EmbeddingSource::synthetic;
  table.rows.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < table.rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.rows.cols(); ++c) table.rows(r, c) = rng.normal(0.0, 1.0);
  }
  const bool orthogonal = n <= d;
  for (Eigen::Index r = 0; r < table.rows.rows(); ++r) {
    Eigen::VectorXd v = table.rows.row(r).transpose();
    if (orthogonal) {
      // Modified Gram-Schmidt, two passes for numerical orthogonality.
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index q = 0; q < r; ++q) {
          const Eigen::VectorXd u = table.rows.row(q).transpose();
          v -= u.dot(v) * u;
        }
      }
    }
    table.rows.row(r) = (v / v.norm()).transpose();
  }
  if (names.empty()) {
    for (std::size_t i = 0; i < n; ++i) names.push_back("anchor " + std::to_string(i));
  }
  if (names.size() != n) throw DimensionError("synthetic anchors: name count mismatch");
  table.names = std::move(names);
  return table;
}

}  // namespace lgseg
