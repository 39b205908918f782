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

#ifndef QFLOW_COST_HPP_
#define QFLOW_COST_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qflow/ir.hpp"

namespace qflow::cost {

// Bit operations of one layer:
//   m * n * k^2 * (b_a * b_w + b_a + b_w + log2(n * k^2)) * out_positions
// Throws DomainError if any argument is below 1.
double bops_layer(std::int64_t m, std::int64_t n, std::int64_t k, std::int64_t b_a,
                  std::int64_t b_w, std::int64_t out_positions);

struct LayerCost {
  std::string node;
  std::int64_t m = 0;
  std::int64_t n = 0;
  std::int64_t k = 1;
  std::int64_t b_a = 0;
  std::int64_t b_w = 0;
  std::int64_t out_positions = 1;
  std::int64_t params = 0;
  double bops = 0.0;
  std::int64_t wm_bits = 0;
};

struct CostReport {
  double bops = 0.0;
  std::int64_t wm_bits = 0;
  std::int64_t flops = 0;
  std::int64_t params = 0;
  std::optional<double> cost_c;
  std::vector<LayerCost> layers;
};

// Dense layers use k = 1 and one output position. Weight memory counts
// weights and biases at the weight bit width. Throws MissingAnnotation when
// a Linear layer's weights or input activations are FLOAT32.
CostReport model_cost(const Model& m, const Model* baseline = nullptr);

// 2 FLOPs per MAC (full kernel window, padding included), plus one op per
// output element for bias, fused ReLU, BatchNorm, ReLU, pooling, Add, Quant,
// MultiThreshold and Softmax. ArgMax and Flatten are free.
std::int64_t flops(const Model& m);

}  // namespace qflow::cost

#endif  // QFLOW_COST_HPP_
