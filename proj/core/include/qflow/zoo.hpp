// Copyright 2026 The qflow Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QFLOW_ZOO_HPP_
#define QFLOW_ZOO_HPP_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "qflow/ir.hpp"

namespace qflow::zoo {

enum class ZooId { kCnvW1A1, kKwsMlp, kAdAe, kIcCnn };

std::string_view to_string(ZooId id);
std::optional<ZooId> parse_zoo_id(std::string_view text);
const std::vector<ZooId>& all_ids();

inline constexpr std::uint64_t kDefaultSeed = 0x9f3a5c17d2e4b681ULL;

struct ZooSpec {
  ZooId id = ZooId::kCnvW1A1;
  // Multiplies every hidden width (floored). Output layers keep their size.
  Rational width_scale{1};
  // Autoencoder shape; ignored by the other models.
  int ad_hidden_layers = 4;
  std::int64_t ad_hidden_width = 72;
  std::uint64_t seed = kDefaultSeed;
};

// Deterministic pseudo-random instance of a reference topology.
// Throws UnsupportedScale if width_scale leaves a layer with zero width.
Model build(const ZooSpec& spec);
inline Model build(ZooId id) { return build(ZooSpec{id}); }

}  // namespace qflow::zoo

#endif  // QFLOW_ZOO_HPP_
