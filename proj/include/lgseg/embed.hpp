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
#include <string>
#include <string_view>
#include <vector>

#include "lgseg/binary_io.hpp"
#include "lgseg/catalog.hpp"

namespace lgseg {

enum class EmbeddingSource { clip, bert, gpt2, synthetic };

std::string_view to_string(EmbeddingSource source);
EmbeddingSource parse_embedding_source(std::string_view text);

// Per-category text anchors, one unit-norm row per catalog id.
struct EmbeddingTable {
  std::vector<std::string> names;
  Eigen::MatrixXd rows;  // N x D
  EmbeddingSource source = EmbeddingSource::synthetic;

  std::size_t size() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(rows.cols()); }
};

// Unscaled EMB1 payload as stored on disk.
struct RawEmbeddings {
  std::vector<std::string> names;
  Eigen::MatrixXd vectors;  // values are exactly representable as f32

  bool operator==(const RawEmbeddings& other) const {
    return names == other.names && vectors.rows() == other.vectors.rows() &&
           vectors.cols() == other.vectors.cols() && vectors == other.vectors;
  }
};

// EMB1: "EMB1", u32 count, u32 dim, then per row u16 name length, UTF-8 name
// bytes, dim x f32. Little-endian.
Bytes encode_embeddings(const RawEmbeddings& raw);
RawEmbeddings decode_embeddings(std::span<const std::uint8_t> bytes);
std::size_t write_embeddings(const std::filesystem::path& path, const RawEmbeddings& raw);
RawEmbeddings read_embeddings(const std::filesystem::path& path);
RawEmbeddings to_raw(const EmbeddingTable& table);

// x / |x|; vectors already unit-norm to within 1e-12 are returned unchanged,
// which makes normalization idempotent. Throws DegenerateEmbeddingError on 0.
Eigen::VectorXd normalized(const Eigen::VectorXd& x);

// Rows re-ordered to catalog id order (matched on canonical names) and
// normalized. Throws EmbeddingCoverageError / DegenerateEmbeddingError.
EmbeddingTable load_table(const RawEmbeddings& raw, const LabelCatalog& catalog,
                          EmbeddingSource source = EmbeddingSource::clip);
EmbeddingTable load_table(const std::filesystem::path& path, const LabelCatalog& catalog,
                          EmbeddingSource source = EmbeddingSource::clip);

struct PcaModel {
  Eigen::VectorXd mean;       // D
  Eigen::MatrixXd basis;      // D x d, orthonormal columns
  Eigen::VectorXd variances;  // d, non-increasing
  double total_variance = 0.0;

  std::size_t input_dim() const { return static_cast<std::size_t>(basis.rows()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(basis.cols()); }
  double retained_variance_ratio() const;
};

// Covariance eigendecomposition (sample covariance, N - 1 denominator). Each
// basis column's largest-magnitude entry is made positive. Throws PcaRankError
// unless 1 <= d <= min(N, D).
PcaModel fit_pca(const Eigen::MatrixXd& data, std::size_t d);
PcaModel fit_pca(const EmbeddingTable& table, std::size_t d);

// (row - mean) * basis, without re-normalization.
Eigen::MatrixXd project_rows(const PcaModel& model, const Eigen::MatrixXd& data);
Eigen::MatrixXd reconstruct_rows(const PcaModel& model, const Eigen::MatrixXd& projected);

// Projected and re-normalized table. Throws DimensionError on a dim mismatch.
EmbeddingTable project(const PcaModel& model, const EmbeddingTable& table);

// Deterministic anchors: orthonormal (Gram-Schmidt) when n <= d, otherwise
// independent random unit vectors. Names default to "anchor <i>".
EmbeddingTable synthetic_anchors(std::size_t n, std::size_t d, std::uint64_t seed,
                                 std::vector<std::string> names = {});

}  // namespace lgseg
