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

#include "qflow/exec.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace qflow {

namespace {

__extension__ typedef __int128 i128;

i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t clamp_code(i128 v, const DataType& dt) {
  if (v < dt.min_code()) return dt.min_code();
  if (v > dt.max_code()) return dt.max_code();
  return static_cast<std::int64_t>(v);
}

std::int64_t shift_left(std::int64_t v, int s) {
  return s <= 0 ? v : v * (std::int64_t{1} << s);
}

}  // namespace

// --- scalar semantics -----------------------------------------------------------

QuantParams QuantParams::from_node(const Node& n) {
  QuantParams p;
  p.scale = parse_rational(n.string_attr("scale", "1"));
  p.zero_point = n.int_attr("zero_point", 0);
  p.dtype = DataType::parse(n.string_attr("dtype", "INT8"));
  p.rounding = n.string_attr("rounding", "ROUND_HALF_UP") == "FLOOR" ? Rounding::kFloor
                                                                     : Rounding::kRoundHalfUp;
  return p;
}

std::int64_t QuantParams::quantize(double x) const {
  const double w = x / to_double(scale) + static_cast<double>(zero_point);
  if (dtype.kind() == DataType::Kind::kBipolar) return w >= 0.0 ? 1 : -1;
  const double r = rounding == Rounding::kFloor ? std::floor(w) : std::floor(w + 0.5);
  if (!(r >= static_cast<double>(dtype.min_code()))) return dtype.min_code();
  if (r > static_cast<double>(dtype.max_code())) return dtype.max_code();
  return static_cast<std::int64_t>(r);
}

std::int64_t QuantParams::quantize_exact(std::int64_t code, int exponent) const {
  i128 num = static_cast<i128>(code) * scale.denominator();
  i128 den = scale.numerator();
  if (exponent > 0) num <<= exponent;
  if (exponent < 0) den <<= -exponent;
  // w = num / den + zero_point
  const i128 shifted = num + static_cast<i128>(zero_point) * den;
  if (dtype.kind() == DataType::Kind::kBipolar) return shifted >= 0 ? 1 : -1;
  const i128 q = rounding == Rounding::kFloor ? floor_div(shifted, den)
                                              : floor_div(2 * shifted + den, 2 * den);
  return clamp_code(q, dtype);
}

Rational QuantParams::dequantize(std::int64_t q) const { return Rational(q - zero_point) * scale; }

std::vector<BatchNormChannel> batchnorm_channels(const Model& m, const Node& bn) {
  auto get = [&](std::size_t i) {
    const Tensor* t = m.find_initializer(bn.inputs.at(i));
    if (!t) throw DtypeError(bn.name, bn.name + ": BatchNorm parameters must be initializers");
    return t->to_reals();
  };
  auto gamma = get(1), beta = get(2), mean = get(3), var = get(4);
  const double eps = bn.float_attr("epsilon", 1e-5);
  std::vector<BatchNormChannel> out(gamma.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = {mean[c], var[c], gamma[c], beta[c], eps};
  return out;
}

MultiThresholdParams MultiThresholdParams::from_node(const Model& m, const Node& n) {
  MultiThresholdParams p;
  const Tensor* t = m.find_initializer(n.inputs.at(1));
  if (!t) throw DtypeError(n.name, n.name + ": thresholds must be an initializer");
  p.thresholds = *t;
  p.out_scale = parse_rational(n.string_attr("out_scale", "1"));
  p.out_bias = parse_rational(n.string_attr("out_bias", "0"));
  p.out_dtype = DataType::parse(n.string_attr("out_dtype", "INT8"));
  return p;
}

std::int64_t MultiThresholdParams::count(std::int64_t row, double x) const {
  const auto cols = static_cast<std::size_t>(columns());
  const auto base = static_cast<std::size_t>(row) * cols;
  std::int64_t c = 0;
  for (std::size_t i = 0; i < cols; ++i) {
    if (x >= thresholds.real_at(base + i)) ++c;
  }
  return c;
}

double cast_real(double value, DataType dtype) {
  if (dtype.is_float()) return value;
  if (dtype.kind() == DataType::Kind::kBipolar) return value >= 0.0 ? 1.0 : -1.0;
  const double lo = dtype.code_to_real(dtype.min_code());
  const double hi = dtype.code_to_real(dtype.max_code());
  return std::clamp(value, lo, hi);
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("argmax", "argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::vector<double> softmax(std::span<const double> values) {
  if (values.empty()) return {};
  const double mx = *std::max_element(values.begin(), values.end());
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += out[i] = std::exp(values[i] - mx);
  for (auto& v : out) v /= sum;
  return out;
}

// --- interpreter ------------------------------------------------------------------

namespace {

struct ConvGeometry {
  std::int64_t c_in, h, w, m, k, stride, pad_top, pad_left, ho, wo;
};

ConvGeometry conv_geometry(const Node& n, const Shape& x, const Shape& wshape, const Shape& out) {
  auto pads = n.ints_attr("pads", {0, 0, 0, 0});
  return {x[0], x[1], x[2], wshape[0], wshape[2], n.int_attr("stride", 1),
          pads[0], pads[1], out[1], out[2]};
}

// Sum of products over each output position, without bias.
template <class T>
std::vector<T> conv_sums(const ConvGeometry& g, const std::vector<T>& x, const std::vector<T>& w) {
  std::vector<T> out(static_cast<std::size_t>(g.m * g.ho * g.wo), T{});
  for (std::int64_t o = 0; o < g.m; ++o) {
    for (std::int64_t oh = 0; oh < g.ho; ++oh) {
      for (std::int64_t ow = 0; ow < g.wo; ++ow) {
        T acc{};
        for (std::int64_t c = 0; c < g.c_in; ++c) {
          for (std::int64_t kh = 0; kh < g.k; ++kh) {
            const std::int64_t ih = oh * g.stride - g.pad_top + kh;
            if (ih < 0 || ih >= g.h) continue;
            for (std::int64_t kw = 0; kw < g.k; ++kw) {
              const std::int64_t iw = ow * g.stride - g.pad_left + kw;
              if (iw < 0 || iw >= g.w) continue;
              acc += w[static_cast<std::size_t>(((o * g.c_in + c) * g.k + kh) * g.k + kw)] *
                     x[static_cast<std::size_t>((c * g.h + ih) * g.w + iw)];
            }
          }
        }
        out[static_cast<std::size_t>((o * g.ho + oh) * g.wo + ow)] = acc;
      }
    }
  }
  return out;
}

template <class T>
std::vector<T> dense_sums(std::int64_t m, std::int64_t n, const std::vector<T>& x,
                          const std::vector<T>& w) {
  std::vector<T> out(static_cast<std::size_t>(m));
  for (std::int64_t o = 0; o < m; ++o) {
    T acc{};
    const std::size_t row = static_cast<std::size_t>(o * n);
    for (std::int64_t i = 0; i < n; ++i) acc += w[row + static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(o)] = acc;
  }
  return out;
}

template <class T, class Cmp>
std::vector<T> max_pool(const Shape& x, const Shape& out, std::int64_t k, std::int64_t s,
                        const std::vector<T>& v, Cmp less) {
  std::vector<T> r(static_cast<std::size_t>(element_count(out)));
  for (std::int64_t c = 0; c < out[0]; ++c)
    for (std::int64_t oh = 0; oh < out[1]; ++oh)
      for (std::int64_t ow = 0; ow < out[2]; ++ow) {
        T best = v[static_cast<std::size_t>((c * x[1] + oh * s) * x[2] + ow * s)];
        for (std::int64_t kh = 0; kh < k; ++kh)
          for (std::int64_t kw = 0; kw < k; ++kw) {
            const T& e = v[static_cast<std::size_t>((c * x[1] + oh * s + kh) * x[2] + ow * s + kw)];
            if (less(best, e)) best = e;
          }
        r[static_cast<std::size_t>((c * out[1] + oh) * out[2] + ow)] = best;
      }
  return r;
}

// Channel index of flat element i for a tensor of `shape` (axis 0 is channels).
std::int64_t channel_of(const Shape& shape, std::size_t i) {
  if (shape.size() <= 1) return static_cast<std::int64_t>(i);
  std::int64_t inner = 1;
  for (std::size_t d = 1; d < shape.size(); ++d) inner *= shape[d];
  return static_cast<std::int64_t>(i) / inner;
}

class Interpreter {
 public:
  Interpreter(const Model& m, ExecMode mode)
      : m_(m), mode_(mode), info_(infer_tensor_info(m)), consumers_(consumer_map(m)) {}

  ExecValue run(const ExecValue& inputs, bool keep_all) {
    if (mode_ == ExecMode::kExactInt) check_boundary();
    for (const auto& decl : m_.inputs) {
      auto it = inputs.find(decl.name);
      if (it == inputs.end()) throw DtypeError(decl.name, "missing model input '" + decl.name + "'");
      values_[decl.name] = admit_input(decl, it->second);
    }
    for (const auto& [name, t] : m_.initializers) values_[name] = admit_constant(t);
    for (auto i : topological_order(m_)) eval(m_.nodes[i]);

    ExecValue out;
    if (keep_all) return values_;
    for (const auto& o : m_.outputs) out[o] = values_.at(o);
    return out;
  }

 private:
  bool exact() const { return mode_ == ExecMode::kExactInt; }

  void check_boundary() const {
    auto check = [&](const std::string& tensor, const std::string& who) {
      if (m_.initializers.count(tensor)) return;  // constants feed float ops freely
      if (!info_.at(tensor).dtype.is_float()) return;
      if (m_.is_graph_output(tensor)) {
        throw DtypeError(who, who + ": FLOAT32 graph output '" + tensor + "' in exact_int mode");
      }
      auto it = consumers_.find(tensor);
      if (it == consumers_.end()) return;
      for (auto c : it->second) {
        const Node& consumer = m_.nodes[c];
        // Float chains are fine as long as they end in a Quant.
        if (consumer.op != OpType::kQuant && !info_.at(consumer.outputs[0]).dtype.is_float()) {
          throw DtypeError(who, who + ": FLOAT32 edge '" + tensor + "' feeds " +
                                    consumer.name + "; exact_int mode needs a quantized graph");
        }
      }
    };
    for (const auto& in : m_.inputs) check(in.name, in.name);
    for (const auto& n : m_.nodes) check(n.outputs[0], n.name);
  }

  Tensor admit_input(const TensorDecl& decl, const Tensor& given) const {
    const auto stored = given.dtype.is_float() ? given.reals.size() : given.ints.size();
    if (element_count(given.shape) != element_count(decl.shape) ||
        static_cast<std::int64_t>(stored) != element_count(decl.shape)) {
      throw DtypeError(decl.name, "input '" + decl.name + "' has shape " +
                                      shape_to_string(given.shape) + ", expected " +
                                      shape_to_string(decl.shape));
    }
    if (!exact()) return Tensor::from_reals(decl.shape, given.to_reals());
    if (decl.dtype.is_float()) return Tensor::from_reals(decl.shape, given.to_reals());
    if (given.dtype.is_float()) {
      throw DtypeError(decl.name, "float value fed to exact_int input '" + decl.name + "'");
    }
    if (given.dtype != decl.dtype) {
      throw DtypeError(decl.name, "input '" + decl.name + "' is " + given.dtype.to_string() +
                                      ", declared " + decl.dtype.to_string());
    }
    for (auto v : given.ints) {
      if (!decl.dtype.contains_code(v)) {
        throw DtypeError(decl.name, "input '" + decl.name + "' value outside its dtype");
      }
    }
    return Tensor::from_codes(decl.shape, decl.dtype, given.ints);
  }

  Tensor admit_constant(const Tensor& t) const {
    if (!exact()) return Tensor::from_reals(t.shape, t.to_reals());
    return t;
  }

  // Codes of `t` rescaled to frac bits `frac` (must not lose precision).
  static std::vector<std::int64_t> codes_at(const Tensor& t, int frac) {
    const int s = frac - t.dtype.frac_bits();
    std::vector<std::int64_t> out(t.ints.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = shift_left(t.ints[i], s);
    return out;
  }

  void eval(const Node& n) {
    const std::string& out_name = n.outputs[0];
    const TensorInfo& oi = info_.at(out_name);
    std::vector<const Tensor*> in;
    for (const auto& name : n.inputs) in.push_back(&values_.at(name));
    const bool code_path = exact() && !oi.dtype.is_float();
    Tensor result = code_path ? eval_codes(n, in, oi) : eval_reals(n, in, oi);
    result.shape = oi.shape;
    values_[out_name] = std::move(result);
  }

  Tensor eval_reals(const Node& n, const std::vector<const Tensor*>& in, const TensorInfo& oi) {
    std::vector<std::vector<double>> x;
    for (auto* t : in) x.push_back(t->to_reals());
    const Shape& xs = in[0]->shape;
    std::vector<double> y;
    switch (n.op) {
      case OpType::kConv2D:
      case OpType::kDense: {
        y = n.op == OpType::kConv2D
                ? conv_sums(conv_geometry(n, xs, in[1]->shape, oi.shape), x[0], x[1])
                : dense_sums(in[1]->shape[0], in[1]->shape[1], x[0], x[1]);
        if (in.size() == 3) {
          const std::size_t per = y.size() / x[2].size();
          for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[2][i / per];
        }
        if (n.bool_attr("fused_relu", false))
          for (auto& v : y) v = std::max(v, 0.0);
        break;
      }
      case OpType::kBatchNorm: {
        auto ch = batchnorm_channels(m_, n);
        y.resize(x[0].size());
        for (std::size_t i = 0; i < y.size(); ++i)
          y[i] = ch[static_cast<std::size_t>(channel_of(xs, i))].apply(x[0][i]);
        break;
      }
      case OpType::kReLU:
        y = x[0];
        for (auto& v : y) v = std::max(v, 0.0);
        break;
      case OpType::kFlatten:
        y = x[0];
        break;
      case OpType::kMaxPool2D: {
        std::int64_t k = n.int_attr("kernel", 1);
        y = max_pool(xs, oi.shape, k, n.int_attr("stride", k), x[0], std::less<double>());
        break;
      }
      case OpType::kAvgPool2D: {
        std::int64_t k = n.int_attr("kernel", 1), s = n.int_attr("stride", k);
        y.assign(static_cast<std::size_t>(element_count(oi.shape)), 0.0);
        for (std::int64_t c = 0; c < oi.shape[0]; ++c)
          for (std::int64_t oh = 0; oh < oi.shape[1]; ++oh)
            for (std::int64_t ow = 0; ow < oi.shape[2]; ++ow) {
              double acc = 0.0;
              for (std::int64_t kh = 0; kh < k; ++kh)
                for (std::int64_t kw = 0; kw < k; ++kw)
                  acc += x[0][static_cast<std::size_t>((c * xs[1] + oh * s + kh) * xs[2] + ow * s + kw)];
              y[static_cast<std::size_t>((c * oi.shape[1] + oh) * oi.shape[2] + ow)] =
                  acc / static_cast<double>(k * k);
            }
        break;
      }
      case OpType::kAdd:
        y.resize(x[0].size());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[0][i] + x[1][i];
        break;
      case OpType::kQuant: {
        auto q = QuantParams::from_node(n);
        y.resize(x[0].size());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = q.output_real(q.quantize(x[0][i]));
        break;
      }
      case OpType::kMultiThreshold: {
        auto p = MultiThresholdParams::from_node(m_, n);
        const double a = to_double(p.out_scale), b = to_double(p.out_bias);
        y.resize(x[0].size());
        for (std::size_t i = 0; i < y.size(); ++i) {
          const std::int64_t row = p.rows() == 1 ? 0 : channel_of(xs, i);
          y[i] = cast_real(a * static_cast<double>(p.count(row, x[0][i])) + b, p.out_dtype);
        }
        break;
      }
      case OpType::kSoftmax:
        y = softmax(x[0]);
        break;
      case OpType::kArgMax:
        y = {static_cast<double>(argmax(x[0]))};
        break;
    }
    return Tensor::from_reals(oi.shape, std::move(y));
  }

  Tensor eval_codes(const Node& n, const std::vector<const Tensor*>& in, const TensorInfo& oi) {
    for (auto* t : in) {
      if (t->dtype.is_float() && n.op != OpType::kQuant) {
        throw DtypeError(n.name, n.name + ": float operand on the exact_int path");
      }
    }
    const Shape& xs = in[0]->shape;
    const DataType od = oi.dtype;
    std::vector<std::int64_t> y;
    switch (n.op) {
      case OpType::kConv2D:
      case OpType::kDense: {
        const Tensor& x = *in[0];
        const Tensor& w = *in[1];
        y = n.op == OpType::kConv2D
                ? conv_sums(conv_geometry(n, xs, w.shape, oi.shape), x.ints, w.ints)
                : dense_sums(w.shape[0], w.shape[1], x.ints, w.ints);
        const int s = od.frac_bits() - (x.dtype.frac_bits() + w.dtype.frac_bits());
        for (auto& v : y) v = shift_left(v, s);
        if (in.size() == 3) {
          auto b = codes_at(*in[2], od.frac_bits());
          const std::size_t per = y.size() / b.size();
          for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i / per];
        }
        if (n.has_attr("acc_dtype")) {
          const auto acc = DataType::parse(n.string_attr("acc_dtype", ""));
          for (auto v : y) {
            if (!acc.contains_code(v)) {
              throw OverflowError(n.name, n.name + ": accumulator value " + std::to_string(v) +
                                              " exceeds " + acc.to_string());
            }
          }
        }
        if (n.bool_attr("fused_relu", false))
          for (auto& v : y) v = std::max<std::int64_t>(v, 0);
        break;
      }
      case OpType::kReLU:
        y = in[0]->ints;
        for (auto& v : y) v = std::max<std::int64_t>(v, 0);
        break;
      case OpType::kFlatten:
        y = in[0]->ints;
        break;
      case OpType::kMaxPool2D: {
        std::int64_t k = n.int_attr("kernel", 1);
        y = max_pool(xs, oi.shape, k, n.int_attr("stride", k), in[0]->ints, std::less<std::int64_t>());
        break;
      }
      case OpType::kAdd: {
        auto a = codes_at(*in[0], od.frac_bits());
        auto b = codes_at(*in[1], od.frac_bits());
        y.resize(a.size());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + b[i];
        break;
      }
      case OpType::kQuant: {
        auto q = QuantParams::from_node(n);
        const Tensor& x = *in[0];
        y.resize(static_cast<std::size_t>(x.size()));
        for (std::size_t i = 0; i < y.size(); ++i) {
          y[i] = x.dtype.is_float() ? q.quantize(x.reals[i])
                                    : q.quantize_exact(x.ints[i], x.dtype.scale_exponent());
        }
        break;
      }
      case OpType::kMultiThreshold: {
        auto p = MultiThresholdParams::from_node(m_, n);
        const Tensor& x = *in[0];
        if (p.thresholds.dtype.is_float()) {
          throw DtypeError(n.name, n.name + ": FLOAT32 thresholds on the exact_int path");
        }
        const int frac = std::max(x.dtype.frac_bits(), p.thresholds.dtype.frac_bits());
        auto xc = codes_at(x, frac);
        auto tc = codes_at(p.thresholds, frac);
        const Rational a = p.out_scale * pow2(od.frac_bits());
        const Rational b = p.out_bias * pow2(od.frac_bits());
        if (a.denominator() != 1 || b.denominator() != 1) {
          throw DtypeError(n.name, n.name + ": out_scale/out_bias not representable in " + od.to_string());
        }
        const auto cols = static_cast<std::size_t>(p.columns());
        y.resize(xc.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
          const auto row = static_cast<std::size_t>(p.rows() == 1 ? 0 : channel_of(xs, i));
          auto first = tc.begin() + static_cast<std::ptrdiff_t>(row * cols);
          const auto count = std::upper_bound(first, first + static_cast<std::ptrdiff_t>(cols), xc[i]) - first;
          const i128 v = static_cast<i128>(a.numerator()) * count + b.numerator();
          y[i] = od.kind() == DataType::Kind::kBipolar ? (v >= 0 ? 1 : -1) : clamp_code(v, od);
        }
        break;
      }
      case OpType::kArgMax: {
        const auto& v = in[0]->ints;
        if (v.empty()) throw EmptyInput(n.name, "argmax of an empty tensor");
        y = {static_cast<std::int64_t>(std::max_element(v.begin(), v.end()) - v.begin())};
        break;
      }
      default:
        throw DtypeError(n.name, n.name + ": " + std::string(to_string(n.op)) +
                                     " has no exact integer semantics");
    }
    return Tensor::from_codes(oi.shape, od, std::move(y));
  }

  const Model& m_;
  ExecMode mode_;
  std::map<std::string, TensorInfo> info_;
  std::map<std::string, std::vector<std::size_t>> consumers_;
  ExecValue values_;
};

}  // namespace

ExecValue run(const Model& m, const ExecValue& inputs, const ExecOptions& options) {
  return Interpreter(m, options.mode).run(inputs, options.keep_intermediates);
}

ExecValue run(const Model& m, const ExecValue& inputs, ExecMode mode) {
  return run(m, inputs, ExecOptions{mode, false});
}

}  // namespace qflow
