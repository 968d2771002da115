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

#include <cstdint>

namespace lgseg {

// Dense 0-based category index; the all-ones value marks unlabeled points.
using CategoryId = std::uint16_t;
inline constexpr CategoryId kUnlabeled = 0xFFFF;

using InstanceId = std::uint32_t;
inline constexpr InstanceId kNoInstance = 0xFFFFFFFF;

}  // namespace lgseg
