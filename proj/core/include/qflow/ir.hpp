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

#ifndef QFLOW_IR_HPP_
#define QFLOW_IR_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qflow/datatype.hpp"
#include "qflow/errors.hpp"

namespace qflow {

using Shape = std::vector<std::int64_t>;

std::int64_t element_count(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// A constant or runtime tensor payload. Integer-backed dtypes use `ints`
// (exact codes); FLOAT32 uses `reals`.
struct Tensor {
  Shape shape;
  DataType dtype;
  std::vector<std::int64_t> ints;
  std::vector<double> reals;

  static Tensor from_codes(Shape shape, DataType dtype, std::vector<std::int64_t> codes);
  static Tensor from_reals(Shape shape, std::vector<double> values);

  std::int64_t size() const { return element_count(shape); }
  // Real value of element i regardless of backing store.
  double real_at(std::size_t i) const;
  std::vector<double> to_reals() const;

  bool operator==(const Tensor&) const = default;
};

struct TensorDecl {
  std::string name;
  Shape shape;
  DataType dtype;

  bool operator==(const TensorDecl&) const = default;
};

enum class OpType {
  kConv2D,
  kDense,
  kBatchNorm,
  kReLU,
  kMaxPool2D,
  kAvgPool2D,
  kAdd,
  kQuant,
  kMultiThreshold,
  kSoftmax,
  kArgMax,
  kFlatten,
};

std::string_view to_string(OpType op);
std::optional<OpType> parse_op(std::string_view text);
inline bool is_linear(OpType op) { return op == OpType::kConv2D || op == OpType::kDense; }

using AttrValue = std::variant<std::int64_t, double, bool, std::string, std::vector<std::int64_t>>;
using Attrs = std::map<std::string, AttrValue>;

struct Node {
  OpType op = OpType::kReLU;
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  Attrs attrs;

  bool has_attr(const std::string& key) const { return attrs.count(key) != 0; }
  std::int64_t int_attr(const std::string& key, std::int64_t fallback) const;
  double float_attr(const std::string& key, double fallback) const;
  bool bool_attr(const std::string& key, bool fallback) const;
  std::string string_attr(const std::string& key, const std::string& fallback) const;
  std::vector<std::int64_t> ints_attr(const std::string& key,
                                      std::vector<std::int64_t> fallback) const;

  bool operator==(const Node&) const = default;
};

enum class Flow { kHls4ml, kFinn };
std::string_view to_string(Flow flow);
std::optional<Flow> parse_flow(std::string_view text);

struct Model {
  std::string name;
  Flow flow = Flow::kFinn;
  std::string notes;
  std::vector<TensorDecl> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, Tensor> initializers;
  std::vector<Node> nodes;

  const Node* find_node(std::string_view name) const;
  const Tensor* find_initializer(std::string_view name) const;
  const TensorDecl* find_input(std::string_view name) const;
  bool is_graph_output(std::string_view tensor) const;

  bool operator==(const Model&) const = default;
};

// Attribute schema for a node of type `op`.
struct AttrSpec {
  enum class Type { kInt, kFloat, kBool, kString, kInts };
  std::string name;
  Type type;
  bool required;
};
const std::vector<AttrSpec>& attr_specs(OpType op);

// Input arity bounds for each op (e.g. Dense takes x, W and optional b).
std::pair<std::size_t, std::size_t> input_arity(OpType op);

// Node indices in a deterministic topological order. Among ready nodes the
// earliest declared is taken first. Throws ValidationError("dag") on cycles.
std::vector<std::size_t> topological_order(const Model& m);

// Maps tensor name -> index of the producing node.
std::map<std::string, std::size_t> producer_map(const Model& m);
// Maps tensor name -> indices of consuming nodes, in declaration order.
std::map<std::string, std::vector<std::size_t>> consumer_map(const Model& m);

struct TensorInfo {
  Shape shape;
  DataType dtype;
};

// Shape and dtype of every tensor (inputs, initializers, node outputs).
// Throws ValidationError when inference fails.
std::map<std::string, TensorInfo> infer_tensor_info(const Model& m);

// All model invariants; empty iff the model is valid.
std::vector<Diagnostic> validate(const Model& m);
// Throws ValidationError when validate() reports anything.
void require_valid(const Model& m);

// Weight + bias element counts of Conv2D/Dense nodes.
std::int64_t count_params(const Model& m);
// gamma/beta/mean/var element counts of BatchNorm nodes.
std::int64_t count_bn_params(const Model& m);

// Tensor names not used by any node or graph output.
std::vector<std::string> unused_initializers(const Model& m);
void remove_unused_initializers(Model& m);

}  // namespace qflow

#endif  // QFLOW_IR_HPP_
