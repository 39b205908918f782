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

#include "qflow/ir.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace qflow {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kSchema: return "SchemaError";
    case ErrorKind::kValidation: return "ValidationError";
    case ErrorKind::kOverflow: return "OverflowError";
    case ErrorKind::kDtype: return "DtypeError";
    case ErrorKind::kNotStreamlinable: return "NotStreamlinable";
    case ErrorKind::kPatternNotFound: return "PatternNotFound";
    case ErrorKind::kDomain: return "DomainError";
    case ErrorKind::kMissingAnnotation: return "MissingAnnotation";
    case ErrorKind::kUnmappableOp: return "UnmappableOp";
    case ErrorKind::kPlanIncomplete: return "PlanIncomplete";
    case ErrorKind::kSizingUnstable: return "SizingUnstable";
    case ErrorKind::kDeadlockedResult: return "DeadlockedResult";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kUnsupportedScale: return "UnsupportedScale";
  }
  return "Error";
}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diags) {
  std::ostringstream os;
  for (std::size_t i = 0; i < diags.size(); ++i) {
    if (i) os << "; ";
    os << diags[i].subject << ": [" << diags[i].rule << "] " << diags[i].message;
  }
  return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<Diagnostic> diagnostics)
    : Error(ErrorKind::kValidation, diagnostics.empty() ? "" : diagnostics.front().subject,
            join_diagnostics(diagnostics)),
      diagnostics_(std::move(diagnostics)) {}

PipelineError::PipelineError(std::size_t pass_index, std::string pass_name, const Error& cause)
    : Error(cause.kind(), cause.subject(),
            "pass #" + std::to_string(pass_index) + " (" + pass_name + "): " + cause.what()),
      pass_index_(pass_index),
      pass_name_(std::move(pass_name)),
      cause_kind_(cause.kind()) {}

// --- tensors ---------------------------------------------------------------

std::int64_t element_count(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor Tensor::from_codes(Shape shape, DataType dtype, std::vector<std::int64_t> codes) {
  Tensor t;
  t.shape = std::move(shape);
  t.dtype = dtype;
  t.ints = std::move(codes);
  return t;
}

Tensor Tensor::from_reals(Shape shape, std::vector<double> values) {
  Tensor t;
  t.shape = std::move(shape);
  t.dtype = DataType::float32();
  t.reals = std::move(values);
  return t;
}

double Tensor::real_at(std::size_t i) const {
  return dtype.is_float() ? reals[i] : dtype.code_to_real(ints[i]);
}

std::vector<double> Tensor::to_reals() const {
  if (dtype.is_float()) return reals;
  std::vector<double> out(ints.size());
  for (std::size_t i = 0; i < ints.size(); ++i) out[i] = dtype.code_to_real(ints[i]);
  return out;
}

// --- ops and attributes ------------------------------------------------------

namespace {

constexpr std::pair<OpType, std::string_view> kOpNames[] = {
    {OpType::kConv2D, "Conv2D"},       {OpType::kDense, "Dense"},
    {OpType::kBatchNorm, "BatchNorm"}, {OpType::kReLU, "ReLU"},
    {OpType::kMaxPool2D, "MaxPool2D"}, {OpType::kAvgPool2D, "AvgPool2D"},
    {OpType::kAdd, "Add"},             {OpType::kQuant, "Quant"},
    {OpType::kMultiThreshold, "MultiThreshold"},
    {OpType::kSoftmax, "Softmax"},     {OpType::kArgMax, "ArgMax"},
    {OpType::kFlatten, "Flatten"},
};

}  // namespace

std::string_view to_string(OpType op) {
  for (auto& [o, n] : kOpNames)
    if (o == op) return n;
  return "?";
}

std::optional<OpType> parse_op(std::string_view text) {
  for (auto& [o, n] : kOpNames)
    if (n == text) return o;
  return std::nullopt;
}

std::string_view to_string(Flow flow) { return flow == Flow::kHls4ml ? "hls4ml" : "finn"; }

std::optional<Flow> parse_flow(std::string_view text) {
  if (text == "hls4ml") return Flow::kHls4ml;
  if (text == "finn") return Flow::kFinn;
  return std::nullopt;
}

std::int64_t Node::int_attr(const std::string& key, std::int64_t fallback) const {
  auto it = attrs.find(key);
  if (it == attrs.end()) return fallback;
  if (auto* v = std::get_if<std::int64_t>(&it->second)) return *v;
  return fallback;
}

double Node::float_attr(const std::string& key, double fallback) const {
  auto it = attrs.find(key);
  if (it == attrs.end()) return fallback;
  if (auto* v = std::get_if<double>(&it->second)) return *v;
  if (auto* v = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*v);
  return fallback;
}

bool Node::bool_attr(const std::string& key, bool fallback) const {
  auto it = attrs.find(key);
  if (it == attrs.end()) return fallback;
  if (auto* v = std::get_if<bool>(&it->second)) return *v;
  return fallback;
}

std::string Node::string_attr(const std::string& key, const std::string& fallback) const {
  auto it = attrs.find(key);
  if (it == attrs.end()) return fallback;
  if (auto* v = std::get_if<std::string>(&it->second)) return *v;
  if (auto* v = std::get_if<std::int64_t>(&it->second)) return std::to_string(*v);
  return fallback;
}

std::vector<std::int64_t> Node::ints_attr(const std::string& key,
                                          std::vector<std::int64_t> fallback) const {
  auto it = attrs.find(key);
  if (it == attrs.end()) return fallback;
  if (auto* v = std::get_if<std::vector<std::int64_t>>(&it->second)) return *v;
  return fallback;
}

const std::vector<AttrSpec>& attr_specs(OpType op) {
  using T = AttrSpec::Type;
  static const std::vector<AttrSpec> kNone;
  static const std::vector<AttrSpec> kConv = {
      {"kernel", T::kInt, true},        {"stride", T::kInt, false},
      {"pads", T::kInts, false},        {"fused_relu", T::kBool, false},
      {"acc_dtype", T::kString, false}, {"reuse_factor", T::kInt, false}};
  static const std::vector<AttrSpec> kDense = {{"fused_relu", T::kBool, false},
                                               {"acc_dtype", T::kString, false},
                                               {"reuse_factor", T::kInt, false}};
  static const std::vector<AttrSpec> kBn = {{"epsilon", T::kFloat, true}};
  static const std::vector<AttrSpec> kPool = {{"kernel", T::kInt, true},
                                              {"stride", T::kInt, false}};
  static const std::vector<AttrSpec> kQuant = {{"scale", T::kString, true},
                                               {"zero_point", T::kInt, false},
                                               {"dtype", T::kString, true},
                                               {"rounding", T::kString, false}};
  static const std::vector<AttrSpec> kMt = {{"out_scale", T::kString, false},
                                            {"out_bias", T::kString, false},
                                            {"out_dtype", T::kString, true}};
  switch (op) {
    case OpType::kConv2D: return kConv;
    case OpType::kDense: return kDense;
    case OpType::kBatchNorm: return kBn;
    case OpType::kMaxPool2D:
    case OpType::kAvgPool2D: return kPool;
    case OpType::kQuant: return kQuant;
    case OpType::kMultiThreshold: return kMt;
    default: return kNone;
  }
}

std::pair<std::size_t, std::size_t> input_arity(OpType op) {
  switch (op) {
    case OpType::kConv2D:
    case OpType::kDense: return {2, 3};
    case OpType::kBatchNorm: return {5, 5};
    case OpType::kAdd:
    case OpType::kMultiThreshold: return {2, 2};
    default: return {1, 1};
  }
}

// --- model helpers -------------------------------------------------------------

const Node* Model::find_node(std::string_view n) const {
  for (const auto& node : nodes)
    if (node.name == n) return &node;
  return nullptr;
}

const Tensor* Model::find_initializer(std::string_view n) const {
  auto it = initializers.find(std::string(n));
  return it == initializers.end() ? nullptr : &it->second;
}

const TensorDecl* Model::find_input(std::string_view n) const {
  for (const auto& in : inputs)
    if (in.name == n) return &in;
  return nullptr;
}

bool Model::is_graph_output(std::string_view tensor) const {
  return std::find(outputs.begin(), outputs.end(), tensor) != outputs.end();
}

std::map<std::string, std::size_t> producer_map(const Model& m) {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < m.nodes.size(); ++i)
    for (const auto& o : m.nodes[i].outputs) out.emplace(o, i);
  return out;
}

std::map<std::string, std::vector<std::size_t>> consumer_map(const Model& m) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < m.nodes.size(); ++i)
    for (const auto& in : m.nodes[i].inputs) {
      auto& v = out[in];
      if (v.empty() || v.back() != i) v.push_back(i);
    }
  return out;
}

namespace {

// Kahn's algorithm; returns the order and the set of nodes left on a cycle.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> kahn(const Model& m) {
  const auto producers = producer_map(m);
  const std::size_t n = m.nodes.size();
  std::vector<std::set<std::size_t>> deps(n);
  std::vector<std::vector<std::size_t>> users(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& in : m.nodes[i].inputs) {
      auto it = producers.find(in);
      if (it != producers.end() && deps[i].insert(it->second).second) {
        users[it->second].push_back(i);
      }
    }
  }
  std::vector<std::size_t> pending(n);
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    pending[i] = deps[i].size();
    if (pending[i] == 0) ready.insert(i);
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    std::size_t i = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(i);
    for (auto u : users[i])
      if (--pending[u] == 0) ready.insert(u);
  }
  std::vector<std::size_t> cyclic;
  for (std::size_t i = 0; i < n; ++i)
    if (pending[i] != 0) cyclic.push_back(i);
  return {order, cyclic};
}

}  // namespace

std::vector<std::size_t> topological_order(const Model& m) {
  auto [order, cyclic] = kahn(m);
  if (!cyclic.empty()) {
    throw ValidationError({{m.nodes[cyclic.front()].name, "dag", "not a DAG"}});
  }
  return order;
}

// --- inference -----------------------------------------------------------------

namespace {

struct InferContext {
  const Model& m;
  std::map<std::string, TensorInfo>& info;
  std::vector<Diagnostic>& diags;

  const TensorInfo* get(const std::string& name) const {
    auto it = info.find(name);
    return it == info.end() ? nullptr : &it->second;
  }
  void fail(const Node& n, const std::string& msg) { diags.push_back({n.name, "shape", msg}); }
};

DataType linear_out_dtype(const Node& n, const TensorInfo& x, const TensorInfo& w,
                          const TensorInfo* b) {
  if (x.dtype.is_float() || w.dtype.is_float() || (b && b->dtype.is_float())) {
    return DataType::float32();
  }
  int frac = x.dtype.frac_bits() + w.dtype.frac_bits();
  if (b) frac = std::max(frac, b->dtype.frac_bits());
  int bits = 32;
  if (auto acc = DataType::try_parse(n.string_attr("acc_dtype", ""))) bits = acc->bits();
  return DataType::accumulator(bits, frac);
}

std::int64_t pooled(std::int64_t in, std::int64_t pad, std::int64_t k, std::int64_t s) {
  return (in + pad - k) / s + 1;
}

void infer_node(InferContext& ctx, const Node& n) {
  std::vector<const TensorInfo*> in;
  for (const auto& name : n.inputs) {
    const TensorInfo* t = ctx.get(name);
    if (!t) {
      ctx.fail(n, "input '" + name + "' has no inferred type");
      return;
    }
    in.push_back(t);
  }
  auto set = [&](Shape shape, DataType dt) {
    for (const auto& o : n.outputs) ctx.info[o] = TensorInfo{shape, dt};
  };
  const TensorInfo& x = *in[0];
  switch (n.op) {
    case OpType::kConv2D: {
      const TensorInfo& w = *in[1];
      if (x.shape.size() != 3 || w.shape.size() != 4) {
        return ctx.fail(n, "Conv2D expects x[C,H,W] and W[M,C,k,k]");
      }
      std::int64_t k = n.int_attr("kernel", 0), s = n.int_attr("stride", 1);
      auto pads = n.ints_attr("pads", {0, 0, 0, 0});
      if (w.shape[1] != x.shape[0] || w.shape[2] != k || w.shape[3] != k) {
        return ctx.fail(n, "weight shape " + shape_to_string(w.shape) +
                               " does not match input " + shape_to_string(x.shape) +
                               " and kernel " + std::to_string(k));
      }
      if (in.size() == 3 && in[2]->shape != Shape{w.shape[0]}) {
        return ctx.fail(n, "bias shape must be [M]");
      }
      std::int64_t ho = pooled(x.shape[1], pads[0] + pads[2], k, s);
      std::int64_t wo = pooled(x.shape[2], pads[1] + pads[3], k, s);
      if (ho < 1 || wo < 1) return ctx.fail(n, "empty convolution output");
      return set({w.shape[0], ho, wo}, linear_out_dtype(n, x, w, in.size() == 3 ? in[2] : nullptr));
    }
    case OpType::kDense: {
      const TensorInfo& w = *in[1];
      if (x.shape.size() != 1 || w.shape.size() != 2 || w.shape[1] != x.shape[0]) {
        return ctx.fail(n, "Dense expects x[N] and W[M,N]; got " + shape_to_string(x.shape) +
                               " and " + shape_to_string(w.shape));
      }
      if (in.size() == 3 && in[2]->shape != Shape{w.shape[0]}) {
        return ctx.fail(n, "bias shape must be [M]");
      }
      return set({w.shape[0]}, linear_out_dtype(n, x, w, in.size() == 3 ? in[2] : nullptr));
    }
    case OpType::kBatchNorm: {
      if (x.shape.empty()) return ctx.fail(n, "BatchNorm input must have a channel axis");
      for (std::size_t i = 1; i < in.size(); ++i) {
        if (in[i]->shape != Shape{x.shape[0]}) {
          return ctx.fail(n, "BatchNorm parameter '" + n.inputs[i] + "' must have shape [C]");
        }
      }
      return set(x.shape, DataType::float32());
    }
    case OpType::kReLU:
    case OpType::kFlatten: {
      if (n.op == OpType::kFlatten) return set({element_count(x.shape)}, x.dtype);
      return set(x.shape, x.dtype);
    }
    case OpType::kMaxPool2D:
    case OpType::kAvgPool2D: {
      if (x.shape.size() != 3) return ctx.fail(n, "pooling expects x[C,H,W]");
      std::int64_t k = n.int_attr("kernel", 0), s = n.int_attr("stride", k);
      std::int64_t ho = pooled(x.shape[1], 0, k, s), wo = pooled(x.shape[2], 0, k, s);
      if (ho < 1 || wo < 1) return ctx.fail(n, "empty pooling output");
      return set({x.shape[0], ho, wo},
                 n.op == OpType::kMaxPool2D ? x.dtype : DataType::float32());
    }
    case OpType::kAdd: {
      const TensorInfo& y = *in[1];
      if (x.shape != y.shape) return ctx.fail(n, "Add operands differ in shape");
      if (x.dtype.is_float() || y.dtype.is_float()) return set(x.shape, DataType::float32());
      int frac = std::max(x.dtype.frac_bits(), y.dtype.frac_bits());
      int bits = std::min(32, std::max(x.dtype.bits() + frac - x.dtype.frac_bits(),
                                       y.dtype.bits() + frac - y.dtype.frac_bits()) + 1);
      return set(x.shape, DataType::accumulator(bits, frac));
    }
    case OpType::kQuant:
      return set(x.shape, DataType::parse(n.string_attr("dtype", "")));
    case OpType::kMultiThreshold: {
      const TensorInfo& t = *in[1];
      std::int64_t channels = x.shape.empty() ? 1 : x.shape[0];
      if (t.shape.size() != 2 || (t.shape[0] != 1 && t.shape[0] != channels)) {
        return ctx.fail(n, "thresholds must have shape [1,T] or [C,T]");
      }
      return set(x.shape, DataType::parse(n.string_attr("out_dtype", "")));
    }
    case OpType::kSoftmax:
      return set(x.shape, DataType::float32());
    case OpType::kArgMax:
      return set({1}, DataType::int_type(32));
  }
}

bool attr_matches(const AttrValue& v, AttrSpec::Type t) {
  switch (t) {
    case AttrSpec::Type::kInt: return std::holds_alternative<std::int64_t>(v);
    case AttrSpec::Type::kFloat:
      return std::holds_alternative<double>(v) || std::holds_alternative<std::int64_t>(v);
    case AttrSpec::Type::kBool: return std::holds_alternative<bool>(v);
    case AttrSpec::Type::kString:
      return std::holds_alternative<std::string>(v) || std::holds_alternative<std::int64_t>(v);
    case AttrSpec::Type::kInts: return std::holds_alternative<std::vector<std::int64_t>>(v);
  }
  return false;
}

void check_tensor_payload(const std::string& name, const Tensor& t,
                          std::vector<Diagnostic>& diags) {
  if (!t.dtype.valid()) {
    diags.push_back({name, "dtype", "invalid datatype " + t.dtype.to_string()});
    return;
  }
  for (auto d : t.shape) {
    if (d < 0) {
      diags.push_back({name, "shape", "negative dimension"});
      return;
    }
  }
  const auto expected = static_cast<std::size_t>(element_count(t.shape));
  const std::size_t actual = t.dtype.is_float() ? t.reals.size() : t.ints.size();
  if (actual != expected || (t.dtype.is_float() ? !t.ints.empty() : !t.reals.empty())) {
    diags.push_back({name, "data-size",
                     "payload has " + std::to_string(actual) + " elements, shape " +
                         shape_to_string(t.shape) + " needs " + std::to_string(expected)});
    return;
  }
  if (!t.dtype.is_float()) {
    for (auto v : t.ints) {
      if (!t.dtype.contains_code(v)) {
        diags.push_back({name, "data-domain",
                         "value " + std::to_string(v) + " outside " + t.dtype.to_string()});
        return;
      }
    }
  }
}

// Op-specific attribute constraints.
void check_node_attrs(const Model& m, const Node& n, std::vector<Diagnostic>& diags) {
  auto add = [&](const std::string& rule, const std::string& msg) {
    diags.push_back({n.name, rule, msg});
  };
  switch (n.op) {
    case OpType::kConv2D:
    case OpType::kMaxPool2D:
    case OpType::kAvgPool2D: {
      if (n.int_attr("kernel", 1) < 1) add("kernel≥1", "kernel must be at least 1");
      std::int64_t stride = n.int_attr("stride", n.op == OpType::kConv2D ? 1 : n.int_attr("kernel", 1));
      if (stride < 1) add("stride≥1", "stride must be at least 1");
      if (n.op == OpType::kConv2D) {
        auto pads = n.ints_attr("pads", {0, 0, 0, 0});
        if (pads.size() != 4 || std::any_of(pads.begin(), pads.end(), [](auto p) { return p < 0; })) {
          add("pads", "pads must be four non-negative integers [top,left,bottom,right]");
        }
      }
      break;
    }
    case OpType::kBatchNorm: {
      if (!(n.float_attr("epsilon", 0.0) > 0.0)) add("epsilon>0", "epsilon must be positive");
      if (n.inputs.size() == 5) {
        if (const Tensor* var = m.find_initializer(n.inputs[4])) {
          auto vals = var->to_reals();
          if (std::any_of(vals.begin(), vals.end(), [](double v) { return v < 0.0; })) {
            add("variance≥0", "moving variance must be non-negative");
          }
        }
      }
      break;
    }
    case OpType::kQuant: {
      try {
        if (parse_rational(n.string_attr("scale", "")) <= 0) add("scale>0", "scale must be positive");
      } catch (const Error&) {
        add("scale>0", "scale is not a rational literal");
      }
      auto dt = DataType::try_parse(n.string_attr("dtype", ""));
      if (!dt || !dt->valid() || dt->is_float()) {
        add("quant-dtype", "Quant dtype must be a valid INT, UINT, BIPOLAR or FIXED type");
      }
      auto r = n.string_attr("rounding", "ROUND_HALF_UP");
      if (r != "ROUND_HALF_UP" && r != "FLOOR") add("rounding", "unknown rounding mode " + r);
      break;
    }
    case OpType::kMultiThreshold: {
      for (const char* key : {"out_scale", "out_bias"}) {
        try {
          parse_rational(n.string_attr(key, "0"));
        } catch (const Error&) {
          add("mt-affine", std::string(key) + " is not a rational literal");
        }
      }
      auto dt = DataType::try_parse(n.string_attr("out_dtype", ""));
      if (!dt || !dt->valid()) add("mt-dtype", "out_dtype must be a valid datatype");
      if (n.inputs.size() == 2) {
        if (const Tensor* t = m.find_initializer(n.inputs[1]); t && t->shape.size() == 2) {
          auto vals = t->to_reals();
          auto cols = static_cast<std::size_t>(t->shape[1]);
          for (std::size_t r = 0; cols && r < vals.size() / cols; ++r) {
            if (!std::is_sorted(vals.begin() + r * cols, vals.begin() + (r + 1) * cols)) {
              add("thresholds-sorted", "threshold row " + std::to_string(r) + " is not sorted");
              break;
            }
          }
        }
      }
      break;
    }
    default:
      break;
  }
  if (is_linear(n.op)) {
    if (n.has_attr("acc_dtype")) {
      auto dt = DataType::try_parse(n.string_attr("acc_dtype", ""));
      if (!dt || dt->kind() != DataType::Kind::kInt || !dt->is_signed() || !dt->valid()) {
        add("acc-dtype", "acc_dtype must be a signed INT type");
      }
    }
    if (n.int_attr("reuse_factor", 1) < 1) add("reuse_factor≥1", "reuse_factor must be at least 1");
  }
}

}  // namespace

std::vector<Diagnostic> validate(const Model& m) {
  std::vector<Diagnostic> diags;

  std::set<std::string> defined;
  auto define = [&](const std::string& name, const std::string& who) {
    if (!defined.insert(name).second) {
      diags.push_back({who, "duplicate-tensor", "tensor '" + name + "' is defined more than once"});
    }
  };
  for (const auto& in : m.inputs) {
    define(in.name, in.name);
    if (!in.dtype.valid()) diags.push_back({in.name, "dtype", "invalid datatype"});
  }
  for (const auto& [name, t] : m.initializers) {
    define(name, name);
    check_tensor_payload(name, t, diags);
  }
  std::set<std::string> node_names;
  for (const auto& n : m.nodes) {
    if (!node_names.insert(n.name).second) {
      diags.push_back({n.name, "node-name-unique", "duplicate node name"});
    }
    if (n.outputs.size() != 1) {
      diags.push_back({n.name, "arity", "every node has exactly one output"});
    }
    for (const auto& o : n.outputs) define(o, n.name);
  }
  for (const auto& n : m.nodes) {
    auto [lo, hi] = input_arity(n.op);
    if (n.inputs.size() < lo || n.inputs.size() > hi) {
      diags.push_back({n.name, "arity", std::string(to_string(n.op)) + " takes " +
                                            std::to_string(lo) + ".." + std::to_string(hi) +
                                            " inputs"});
    }
    for (const auto& in : n.inputs) {
      if (!defined.count(in)) {
        diags.push_back({in, "dangling-input",
                         "node '" + n.name + "' references undefined tensor '" + in + "'"});
      }
    }
    const auto& specs = attr_specs(n.op);
    for (const auto& [key, value] : n.attrs) {
      auto it = std::find_if(specs.begin(), specs.end(), [&](const AttrSpec& s) { return s.name == key; });
      if (it == specs.end()) {
        diags.push_back({n.name, "attr-unknown", "unknown attribute '" + key + "'"});
      } else if (!attr_matches(value, it->type)) {
        diags.push_back({n.name, "attr-type", "attribute '" + key + "' has the wrong type"});
      }
    }
    for (const auto& s : specs) {
      if (s.required && !n.has_attr(s.name)) {
        diags.push_back({n.name, "attr-missing", "missing attribute '" + s.name + "'"});
      }
    }
    check_node_attrs(m, n, diags);
  }
  for (const auto& o : m.outputs) {
    if (!defined.count(o)) diags.push_back({o, "output-undefined", "graph output is never produced"});
  }

  auto [order, cyclic] = kahn(m);
  if (!cyclic.empty()) {
    diags.push_back({m.nodes[cyclic.front()].name, "dag", "not a DAG"});
  }
  if (!diags.empty()) return diags;

  std::map<std::string, TensorInfo> info;
  InferContext ctx{m, info, diags};
  for (const auto& in : m.inputs) info[in.name] = {in.shape, in.dtype};
  for (const auto& [name, t] : m.initializers) info[name] = {t.shape, t.dtype};
  for (auto i : order) {
    infer_node(ctx, m.nodes[i]);
    if (!diags.empty()) break;
  }
  return diags;
}

void require_valid(const Model& m) {
  auto diags = validate(m);
  if (!diags.empty()) throw ValidationError(std::move(diags));
}

std::map<std::string, TensorInfo> infer_tensor_info(const Model& m) {
  std::vector<Diagnostic> diags;
  std::map<std::string, TensorInfo> info;
  InferContext ctx{m, info, diags};
  for (const auto& in : m.inputs) info[in.name] = {in.shape, in.dtype};
  for (const auto& [name, t] : m.initializers) info[name] = {t.shape, t.dtype};
  for (auto i : topological_order(m)) {
    infer_node(ctx, m.nodes[i]);
    if (!diags.empty()) throw ValidationError(std::move(diags));
  }
  return info;
}

std::int64_t count_params(const Model& m) {
  std::int64_t total = 0;
  for (const auto& n : m.nodes) {
    if (!is_linear(n.op)) continue;
    for (std::size_t i = 1; i < n.inputs.size(); ++i) {
      if (const Tensor* t = m.find_initializer(n.inputs[i])) total += t->size();
    }
  }
  return total;
}

std::int64_t count_bn_params(const Model& m) {
  std::int64_t total = 0;
  for (const auto& n : m.nodes) {
    if (n.op != OpType::kBatchNorm) continue;
    for (std::size_t i = 1; i < n.inputs.size(); ++i) {
      if (const Tensor* t = m.find_initializer(n.inputs[i])) total += t->size();
    }
  }
  return total;
}

std::vector<std::string> unused_initializers(const Model& m) {
  std::set<std::string> used(m.outputs.begin(), m.outputs.end());
  for (const auto& n : m.nodes) used.insert(n.inputs.begin(), n.inputs.end());
  std::vector<std::string> out;
  for (const auto& [name, t] : m.initializers)
    if (!used.count(name)) out.push_back(name);
  return out;
}

void remove_unused_initializers(Model& m) {
  for (const auto& name : unused_initializers(m)) m.initializers.erase(name);
}

}  // namespace qflow
