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

#include "qflow/cost.hpp"

#include <cmath>

namespace qflow::cost {

double bops_layer(std::int64_t m, std::int64_t n, std::int64_t k, std::int64_t b_a,
                  std::int64_t b_w, std::int64_t out_positions) {
  const std::pair<const char*, std::int64_t> args[] = {
      {"m", m}, {"n", n}, {"k", k}, {"b_a", b_a}, {"b_w", b_w}, {"out_positions", out_positions}};
  for (const auto& [name, value] : args) {
    if (value < 1) {
      throw DomainError(name, std::string("bops_layer: ") + name + " must be >= 1, got " +
                                  std::to_string(value));
    }
  }
  const double fan_in = static_cast<double>(n) * static_cast<double>(k * k);
  const double macs = static_cast<double>(m) * fan_in;
  const double a = static_cast<double>(b_a), w = static_cast<double>(b_w);
  return macs * (a * w + a + w + std::log2(fan_in)) * static_cast<double>(out_positions);
}

CostReport model_cost(const Model& m, const Model* baseline) {
  CostReport r;
  const auto info = infer_tensor_info(m);
  for (const auto& node : m.nodes) {
    if (!is_linear(node.op)) continue;
    const DataType xd = info.at(node.inputs[0]).dtype;
    const TensorInfo& wi = info.at(node.inputs[1]);
    if (wi.dtype.is_float()) {
      throw MissingAnnotation(node.name, node.name + ": weights have no quantized dtype");
    }
    if (xd.is_float()) {
      throw MissingAnnotation(node.name, node.name + ": input activations have no quantized dtype");
    }
    LayerCost l;
    l.node = node.name;
    l.m = wi.shape[0];
    l.n = wi.shape[1];
    l.k = node.op == OpType::kConv2D ? wi.shape[2] : 1;
    l.b_a = xd.bits();
    l.b_w = wi.dtype.bits();
    const Shape& out = info.at(node.outputs[0]).shape;
    l.out_positions = node.op == OpType::kConv2D ? out[1] * out[2] : 1;
    l.params = element_count(wi.shape);
    if (node.inputs.size() == 3) l.params += element_count(info.at(node.inputs[2]).shape);
    l.bops = bops_layer(l.m, l.n, l.k, l.b_a, l.b_w, l.out_positions);
    l.wm_bits = l.params * l.b_w;
    r.bops += l.bops;
    r.wm_bits += l.wm_bits;
    r.params += l.params;
    r.layers.push_back(l);
  }
  r.flops = flops(m);
  if (baseline) {
    const CostReport ref = model_cost(*baseline);
    if (ref.bops <= 0.0 || ref.wm_bits <= 0) {
      throw DomainError(baseline->name, "baseline has no BOPs or weight memory to normalize by");
    }
    r.cost_c = 0.5 * (r.bops / ref.bops +
                      static_cast<double>(r.wm_bits) / static_cast<double>(ref.wm_bits));
  }
  return r;
}

std::int64_t flops(const Model& m) {
  const auto info = infer_tensor_info(m);
  std::int64_t total = 0;
  for (const auto& node : m.nodes) {
    const std::int64_t out = element_count(info.at(node.outputs[0]).shape);
    switch (node.op) {
      case OpType::kDense:
      case OpType::kConv2D: {
        const Shape& w = info.at(node.inputs[1]).shape;
        const std::int64_t fan_in = element_count(w) / w[0];
        total += 2 * fan_in * out;
        if (node.inputs.size() == 3) total += out;
        if (node.bool_attr("fused_relu", false)) total += out;
        break;
      }
      case OpType::kArgMax:
      case OpType::kFlatten:
        break;
      default:
        total += out;
    }
  }
  return total;
}

}  // namespace qflow::cost
