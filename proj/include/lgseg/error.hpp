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

#include <stdexcept>
#include <string>

namespace lgseg {

// Base of every error raised by the library. The CLI maps the two
// intermediate families onto exit codes: DataError -> 2, NumericError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

#define LGSEG_DEFINE_ERROR(Name, Base) \
  class Name : public Base {           \
   public:                             \
    using Base::Base;                  \
  }

LGSEG_DEFINE_ERROR(IoError, DataError);
LGSEG_DEFINE_ERROR(FormatError, DataError);
LGSEG_DEFINE_ERROR(SceneInvariantError, DataError);
LGSEG_DEFINE_ERROR(CatalogSizeError, DataError);
LGSEG_DEFINE_ERROR(SplitSizeError, DataError);
LGSEG_DEFINE_ERROR(CatalogCountTooSmall, DataError);
LGSEG_DEFINE_ERROR(EmbeddingCoverageError, DataError);
LGSEG_DEFINE_ERROR(DegenerateEmbeddingError, DataError);
LGSEG_DEFINE_ERROR(PcaRankError, DataError);
LGSEG_DEFINE_ERROR(DimensionError, DataError);
LGSEG_DEFINE_ERROR(NegativeSamplingError, DataError);

#undef LGSEG_DEFINE_ERROR

}  // namespace lgseg
