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

#include <algorithm>
#include <cmath>
#include <optional>

#include "pass_util.hpp"
#include "qflow/exec.hpp"
#include "qflow/passes.hpp"

namespace qflow::passes {

namespace {

struct Chain {
  std::size_t linear;
  std::optional<std::size_t> bn;
  std::optional<std::size_t> relu;
  std::size_t quant;
};

// The float computation from accumulator code to Quant code for one channel,
// evaluated exactly as the interpreter's float backend does. `sign` is -1 on
// channels whose weights were negated to make the map non-decreasing.
struct ChannelMap {
  int frac = 0;
  double bias = 0.0;
  bool has_bias = false;
  bool fused_relu = false;
  std::optional<BatchNormChannel> bn;
  bool relu = false;
  const QuantParams* quant = nullptr;
  int sign = 1;

  std::int64_t operator()(std::int64_t acc) const {
    double z = std::ldexp(static_cast<double>(sign * acc), -frac);
    if (has_bias) z += bias;
    if (fused_relu) z = std::max(z, 0.0);
    if (bn) z = bn->apply(z);
    if (relu) z = std::max(z, 0.0);
    return quant->quantize(z);
  }

  // Real-valued cut-point on the (sign-adjusted) accumulator for "output code
  // >= level", ceiled into the accumulator domain. nullopt when the chain has
  // no closed form (zero BatchNorm multiplier) or the value is not finite.
  std::optional<double> analytic_threshold(std::int64_t level, double lo, double hi) const {
    const double scale = to_double(quant->scale);
    const double zp = static_cast<double>(quant->zero_point);
    double y;
    if (quant->dtype.kind() == DataType::Kind::kBipolar) {
      y = -zp * scale;
    } else if (quant->rounding == Rounding::kFloor) {
      y = (static_cast<double>(level) - zp) * scale;
    } else {
      y = (static_cast<double>(level) - 0.5 - zp) * scale;
    }
    if (relu && y <= 0.0) return lo;
    // Pre-BatchNorm bound: z >= c (rising) or z <= c (falling).
    bool rising = true;
    double c = y;
    if (bn) {
      const double v = bn->multiplier();
      if (v == 0.0) return std::nullopt;
      c = (y - bn->beta) / v + bn->mean;
      rising = v > 0.0;
    }
    if (fused_relu) {
      if (rising && c <= 0.0) return lo;
      if (!rising && c < 0.0) return hi + 1;
    }
    const double a = std::ldexp(c - (has_bias ? bias : 0.0), frac);
    const double t = rising ? std::ceil(a) : std::ceil(-a);
    if (!std::isfinite(t)) return std::nullopt;
    return std::clamp(t, lo, hi + 1);
  }
};

// Smallest accumulator value in [lo, hi] whose output code reaches `level`,
// or hi + 1 if none does.
std::int64_t find_threshold(const ChannelMap& f, std::int64_t level, std::int64_t lo,
                            std::int64_t hi) {
  auto reaches = [&](std::int64_t a) { return f(a) >= level; };
  auto is_cut = [&](std::int64_t t) {
    return (t == lo || !reaches(t - 1)) && (t == hi + 1 || reaches(t));
  };
  if (auto guess = f.analytic_threshold(level, static_cast<double>(lo), static_cast<double>(hi))) {
    const auto t = static_cast<std::int64_t>(*guess);
    if (is_cut(t)) return t;
  }
  // The analytic point can be off by an ulp after float rounding; the float
  // predicate is monotone, so bisect on it.
  std::int64_t a = lo, b = hi + 1;
  while (a < b) {
    const std::int64_t mid = a + (b - a) / 2;
    if (reaches(mid)) b = mid;
    else a = mid + 1;
  }
  return a;
}

DataType widened(DataType dt) {
  switch (dt.kind()) {
    case DataType::Kind::kInt: return DataType::int_type(dt.bits() + 1);
    case DataType::Kind::kFixed: return DataType::fixed(dt.bits() + 1, dt.int_bits() + 1);
    default: return dt;
  }
}

std::optional<Chain> match_chain(const Model& m, std::size_t qi,
                                 const std::map<std::string, std::size_t>& producers,
                                 const std::map<std::string, std::vector<std::size_t>>& consumers) {
  Chain c{0, std::nullopt, std::nullopt, qi};
  std::string t = m.nodes[qi].inputs[0];
  auto step = [&](OpType op) -> std::optional<std::size_t> {
    auto it = producers.find(t);
    if (it == producers.end() || m.nodes[it->second].op != op) return std::nullopt;
    if (!detail::single_use(m, consumers, t)) return std::nullopt;
    return it->second;
  };
  if (auto r = step(OpType::kReLU)) {
    c.relu = r;
    t = m.nodes[*r].inputs[0];
  }
  if (auto b = step(OpType::kBatchNorm)) {
    c.bn = b;
    t = m.nodes[*b].inputs[0];
  }
  auto lin = step(OpType::kDense);
  if (!lin) lin = step(OpType::kConv2D);
  if (!lin) return std::nullopt;
  c.linear = *lin;
  return c;
}

}  // namespace

PassResult streamline(const Model& input) {
  Model m = input;
  PassReport report{"streamline"};
  const auto producers = producer_map(m);
  const auto consumers = consumer_map(m);
  const auto info = infer_tensor_info(m);

  std::vector<Chain> chains;
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    if (m.nodes[i].op != OpType::kQuant) continue;
    auto c = match_chain(m, i, producers, consumers);
    if (!c) continue;
    // hls4ml implements integer ReLU and requantization natively; only chains
    // carrying float BatchNorm arithmetic need rewriting there.
    if (m.flow == Flow::kHls4ml && !c->bn) continue;
    chains.push_back(*c);
  }

  std::set<std::size_t> drop;
  for (const auto& c : chains) {
    Node& lin = m.nodes[c.linear];
    const Node& qnode = m.nodes[c.quant];
    const Tensor* w = m.find_initializer(lin.inputs[1]);
    const DataType xd = info.at(lin.inputs[0]).dtype;
    if (!w || w->dtype.is_float() || xd.is_float()) {
      throw NotStreamlinable(lin.name, lin.name + ": streamlining needs integer-typed weights and inputs");
    }
    const Tensor* b = lin.inputs.size() == 3 ? m.find_initializer(lin.inputs[2]) : nullptr;
    if (lin.inputs.size() == 3 && !b) {
      throw NotStreamlinable(lin.name, lin.name + ": bias must be an initializer");
    }

    const QuantParams q = QuantParams::from_node(qnode);
    const std::int64_t channels = w->shape[0];
    std::vector<ChannelMap> maps(static_cast<std::size_t>(channels));
    std::vector<BatchNormChannel> bn;
    if (c.bn) bn = batchnorm_channels(m, m.nodes[*c.bn]);
    const std::vector<double> bias = b ? b->to_reals() : std::vector<double>{};
    for (std::int64_t ch = 0; ch < channels; ++ch) {
      auto& f = maps[static_cast<std::size_t>(ch)];
      f.frac = xd.frac_bits() + w->dtype.frac_bits();
      f.has_bias = b != nullptr;
      if (b) f.bias = bias[static_cast<std::size_t>(ch)];
      f.fused_relu = lin.bool_attr("fused_relu", false);
      if (c.bn) f.bn = bn[static_cast<std::size_t>(ch)];
      f.relu = c.relu.has_value();
      f.quant = &q;
      if (f.bn && f.bn->multiplier() < 0.0) f.sign = -1;
    }

    // Integer Linear: bias and activation move into the thresholds, and
    // falling channels get negated weights.
    std::vector<std::int64_t> codes = w->ints;
    DataType wdt = w->dtype;
    const auto per = static_cast<std::size_t>(w->size() / channels);
    bool negated = false;
    for (std::size_t ch = 0; ch < maps.size(); ++ch) {
      if (maps[ch].sign > 0) continue;
      negated = true;
      for (std::size_t i = 0; i < per; ++i) {
        auto& v = codes[ch * per + i];
        v = -v;
        while (!wdt.contains_code(v)) wdt = widened(wdt.is_signed() ? wdt : DataType::int_type(wdt.bits()));
      }
    }
    if (!wdt.valid()) {
      throw NotStreamlinable(lin.name, lin.name + ": negated weights do not fit " + wdt.to_string());
    }
    if (negated) {
      const std::string wname = detail::fresh_tensor_name(m, lin.name + "_W_int");
      m.initializers[wname] = Tensor::from_codes(w->shape, wdt, std::move(codes));
      lin.inputs[1] = wname;
    }
    lin.inputs.resize(2);
    lin.attrs.erase("fused_relu");
    lin.attrs.erase("acc_dtype");

    const auto ranges = detail::accumulator_ranges(m, lin, info);
    const int frac = maps.front().frac;

    // Output levels: qbase, qbase + step, ..., up to the Quant maximum.
    const bool bipolar = q.dtype.kind() == DataType::Kind::kBipolar;
    const std::int64_t step = bipolar ? 2 : 1;
    const bool floored = maps.front().relu || (maps.front().fused_relu && !c.bn);
    const std::int64_t qbase = floored ? q.quantize(0.0) : q.dtype.min_code();
    const std::int64_t levels = std::max<std::int64_t>(1, (q.dtype.max_code() - qbase) / step);

    std::vector<std::int64_t> thresholds;
    thresholds.reserve(static_cast<std::size_t>(channels * levels));
    std::int64_t tmin = 0, tmax = 0;
    for (std::size_t ch = 0; ch < maps.size(); ++ch) {
      const auto [lo, hi] = ranges[ch];
      for (std::int64_t k = 1; k <= levels; ++k) {
        const std::int64_t t = find_threshold(maps[ch], qbase + k * step, lo, hi);
        thresholds.push_back(t);
        if (thresholds.size() == 1) tmin = tmax = t;
        tmin = std::min(tmin, t);
        tmax = std::max(tmax, t);
      }
    }
    const int bits = std::max(signed_bits_for_range(tmin, tmax), frac);
    if (bits > 32) {
      throw NotStreamlinable(lin.name, lin.name + ": thresholds need more than 32 bits");
    }
    const DataType tdt = DataType::accumulator(bits, frac);
    const std::string tname = detail::fresh_tensor_name(m, qnode.name + "_thresholds");
    m.initializers[tname] = Tensor::from_codes({channels, levels}, tdt, std::move(thresholds));

    const Rational ulp = pow2(q.dtype.scale_exponent());
    Node mt{OpType::kMultiThreshold, qnode.name, {lin.outputs[0], tname}, qnode.outputs, {}};
    mt.attrs["out_scale"] = format_rational(Rational(step) * ulp);
    mt.attrs["out_bias"] = format_rational(Rational(qbase) * ulp);
    mt.attrs["out_dtype"] = q.dtype.to_string();
    m.nodes[c.quant] = std::move(mt);

    ++report.rewritten;
    ++report.added;
    ++report.removed;  // the Quant
    for (auto extra : {c.bn, c.relu}) {
      if (extra) {
        drop.insert(*extra);
        ++report.removed;
      }
    }
  }
  detail::erase_nodes(m, drop);
  remove_unused_initializers(m);

  // Anything float left means the graph was not uniformly quantized.
  const auto after = infer_tensor_info(m);
  for (const auto& n : m.nodes) {
    if (n.op == OpType::kBatchNorm) {
      throw NotStreamlinable(n.name, n.name + ": BatchNorm is not part of a Linear -> BatchNorm -> [ReLU] -> Quant chain");
    }
    if (after.at(n.outputs[0]).dtype.is_float()) {
      throw NotStreamlinable(n.name, n.name + ": " + std::string(to_string(n.op)) +
                                         " produces a FLOAT32 edge that streamlining cannot remove");
    }
  }
  return {std::move(m), report};
}

}  // namespace qflow::passes
