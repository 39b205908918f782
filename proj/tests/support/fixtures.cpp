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

#include "fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "qflow/exec.hpp"

namespace qflow::testing {

GraphBuilder::GraphBuilder(std::string name, Flow flow) {
  m_.name = std::move(name);
  m_.flow = flow;
}

std::string GraphBuilder::input(const std::string& name, Shape shape, DataType dtype) {
  m_.inputs.push_back({name, std::move(shape), dtype});
  return name;
}

std::string GraphBuilder::codes(const std::string& name, Shape shape, DataType dtype,
                                std::vector<std::int64_t> values) {
  m_.initializers[name] = Tensor::from_codes(std::move(shape), dtype, std::move(values));
  return name;
}

std::string GraphBuilder::reals(const std::string& name, Shape shape, std::vector<double> values) {
  m_.initializers[name] = Tensor::from_reals(std::move(shape), std::move(values));
  return name;
}

std::string GraphBuilder::node(OpType op, const std::string& name, std::vector<std::string> inputs,
                               Attrs attrs, std::string output) {
  if (output.empty()) output = name + "_out";
  m_.nodes.push_back({op, name, std::move(inputs), {output}, std::move(attrs)});
  return output;
}

void GraphBuilder::output(const std::string& tensor) { m_.outputs.push_back(tensor); }

Attrs quant_attrs(const std::string& scale, DataType dtype, const std::string& rounding,
                  std::int64_t zero_point) {
  Attrs a{{"scale", scale}, {"dtype", dtype.to_string()}};
  if (rounding != "ROUND_HALF_UP") a["rounding"] = rounding;
  if (zero_point != 0) a["zero_point"] = zero_point;
  return a;
}

Model dequantize_weights(const Model& m) {
  Model out = m;
  for (const auto& n : m.nodes) {
    if (!is_linear(n.op)) continue;
    for (std::size_t i = 1; i < n.inputs.size(); ++i) {
      Tensor& t = out.initializers.at(n.inputs[i]);
      if (t.dtype.is_integer_backed()) t = Tensor::from_reals(t.shape, t.to_reals());
    }
  }
  return out;
}

namespace {

std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::int64_t pick(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

// BatchNorm statistics around an accumulator of magnitude ~`range`; one
// channel in four gets a negative gamma.
void add_random_bn(GraphBuilder& g, std::mt19937_64& rng, const std::string& name,
                   std::int64_t channels, double range) {
  std::vector<double> gamma(channels), beta(channels), mean(channels), var(channels);
  for (std::int64_t c = 0; c < channels; ++c) {
    const double sign = pick(rng, 0, 3) == 0 ? -1.0 : 1.0;
    gamma[c] = sign * std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    beta[c] = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    mean[c] = std::uniform_real_distribution<double>(-range / 4, range / 4)(rng);
    const double sd = range / 4 * std::uniform_real_distribution<double>(0.7, 1.4)(rng);
    var[c] = sd * sd;
  }
  g.reals(name + "_gamma", {channels}, gamma);
  g.reals(name + "_beta", {channels}, beta);
  g.reals(name + "_mean", {channels}, mean);
  g.reals(name + "_var", {channels}, var);
}

}  // namespace

Model random_linear_bn(std::mt19937_64& rng, bool conv) {
  GraphBuilder g(conv ? "conv_bn" : "dense_bn", Flow::kHls4ml);
  std::string x;
  std::string y;
  std::int64_t channels = pick(rng, 1, 8);
  const bool bias = pick(rng, 0, 1) == 1;
  if (conv) {
    const std::int64_t c = pick(rng, 1, 3), k = pick(rng, 1, 3), s = pick(rng, 1, 2);
    const std::int64_t h = pick(rng, k + 1, 6), w = pick(rng, k + 1, 6);
    x = g.input("x", {c, h, w}, DataType::float32());
    g.reals("W", {channels, c, k, k}, uniform(rng, static_cast<std::size_t>(channels * c * k * k), -1, 1));
    std::vector<std::string> in{x, "W"};
    if (bias) in.push_back(g.reals("b", {channels}, uniform(rng, static_cast<std::size_t>(channels), -1, 1)));
    Attrs a{{"kernel", k}, {"stride", s}};
    if (pick(rng, 0, 1) == 1 && k > 1) a["pads"] = std::vector<std::int64_t>{1, 1, 1, 1};
    y = g.node(OpType::kConv2D, "lin", in, a);
  } else {
    const std::int64_t n = pick(rng, 1, 16);
    x = g.input("x", {n}, DataType::float32());
    g.reals("W", {channels, n}, uniform(rng, static_cast<std::size_t>(channels * n), -1, 1));
    std::vector<std::string> in{x, "W"};
    if (bias) in.push_back(g.reals("b", {channels}, uniform(rng, static_cast<std::size_t>(channels), -1, 1)));
    y = g.node(OpType::kDense, "lin", in);
  }
  add_random_bn(g, rng, "bn", channels, 4.0);
  const double eps = std::pow(10.0, -static_cast<double>(pick(rng, 3, 5)));
  y = g.node(OpType::kBatchNorm, "bn", {y, "bn_gamma", "bn_beta", "bn_mean", "bn_var"},
             {{"epsilon", eps}});
  g.output(y);
  return g.build();
}

Model random_toy_layer(std::mt19937_64& rng, const ToyLayerSpec& spec) {
  GraphBuilder g("toy", Flow::kFinn);
  std::string x = g.input("x", {spec.in}, spec.input_dtype);
  const DataType wt = DataType::int_type(spec.weight_bits);
  std::vector<std::int64_t> w(static_cast<std::size_t>(spec.in * spec.out));
  for (auto& v : w) v = pick(rng, wt.min_code(), wt.max_code());
  g.codes("W", {spec.out, spec.in}, wt, w);
  std::vector<std::string> in{x, "W"};
  const double in_mag = std::max(std::abs(to_double(spec.input_dtype.min())),
                                 to_double(spec.input_dtype.max()));
  const double range = in_mag * std::max<double>(1.0, static_cast<double>(-wt.min_code())) *
                       static_cast<double>(spec.in);
  if (spec.bias) {
    const DataType bt = DataType::int_type(12);
    std::vector<std::int64_t> b(static_cast<std::size_t>(spec.out));
    const std::int64_t lim = std::max<std::int64_t>(1, static_cast<std::int64_t>(range / 4));
    for (auto& v : b) v = pick(rng, -lim, lim);
    in.push_back(g.codes("b", {spec.out}, bt, b));
  }
  std::string y = g.node(OpType::kDense, "fc", in);
  std::string scale;
  if (spec.batchnorm) {
    add_random_bn(g, rng, "bn", spec.out, range);
    y = g.node(OpType::kBatchNorm, "bn", {y, "bn_gamma", "bn_beta", "bn_mean", "bn_var"},
               {{"epsilon", 1e-3}});
    static const char* kScales[] = {"1/4", "1/2", "3/8", "1", "5/16"};
    scale = kScales[pick(rng, 0, 4)];
  } else {
    const std::int64_t levels = spec.quant_dtype.max_code() - spec.quant_dtype.min_code() + 1;
    scale = format_rational(Rational(std::max<std::int64_t>(1, static_cast<std::int64_t>(range)),
                                     std::max<std::int64_t>(1, levels / 2)));
  }
  if (spec.relu) y = g.node(OpType::kReLU, "relu", {y});
  y = g.node(OpType::kQuant, "act", {y}, quant_attrs(scale, spec.quant_dtype));
  g.output(y);
  return g.build();
}

dataflow::Pipeline fork_join_pipeline(std::int64_t branch_latency, std::int64_t tokens) {
  using dataflow::Stage;
  using dataflow::StageKind;
  dataflow::Pipeline p;
  Stage src;
  src.kind = StageKind::kSource;
  src.name = "src";
  src.consume = 0;
  src.firings_per_inference = tokens;
  const auto s = p.add_stage(src);

  Stage fork;
  fork.kind = StageKind::kFork;
  fork.name = "fork";
  fork.firings_per_inference = tokens;
  const auto f = p.add_stage(fork);

  // Emits nothing for the first branch_latency - 1 firings, then catches up.
  Stage branch;
  branch.name = "branch";
  branch.firings_per_inference = tokens;
  branch.produce.assign(static_cast<std::size_t>(tokens), 1);
  for (std::int64_t i = 0; i + 1 < branch_latency; ++i) branch.produce[static_cast<std::size_t>(i)] = 0;
  branch.produce.back() = branch_latency;
  if (branch_latency <= 1) branch.produce = {1};
  const auto b = p.add_stage(branch);

  Stage join;
  join.name = "join";
  join.firings_per_inference = tokens;
  join.is_sink = true;
  const auto j = p.add_stage(join);

  p.connect(s, f, 8);
  p.connect(f, b, 8);
  p.connect(f, j, 8);
  p.connect(b, j, 8);
  p.sink_token_elements["join"] = 1;
  return p;
}

dataflow::FifoPlan fork_join_plan(const dataflow::Pipeline& p, std::int64_t short_depth) {
  dataflow::FifoPlan plan;
  for (const auto& e : p.edges) plan.depths[e.name] = 1024;
  plan.depths[kShortEdge] = short_depth;
  return plan;
}

Model skip_connection_model() {
  GraphBuilder g("skip", Flow::kHls4ml);
  const std::string x = g.input("x", {2, 4, 4}, DataType::int_type(4));
  std::vector<std::int64_t> w(2 * 2 * 3 * 3);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<std::int64_t>(i % 3) - 1;
  g.codes("W", {2, 2, 3, 3}, DataType::int_type(2), w);
  const std::string c = g.node(OpType::kConv2D, "conv", {x, "W"},
                               {{"kernel", std::int64_t{3}}, {"pads", std::vector<std::int64_t>{1, 1, 1, 1}}});
  g.output(g.node(OpType::kAdd, "add", {c, x}));
  return g.build();
}

namespace {

std::vector<std::int64_t> divisors(std::int64_t v) {
  std::vector<std::int64_t> d;
  for (std::int64_t i = 1; i <= v; ++i)
    if (v % i == 0) d.push_back(i);
  return d;
}

struct PipelineGen {
  std::mt19937_64& rng;
  dataflow::Pipeline p;
  int budget;
  int serial = 0;

  dataflow::Stage base(const std::string& prefix) {
    dataflow::Stage st;
    st.name = prefix + std::to_string(serial++);
    st.cycles_per_firing = pick(rng, 1, 4);
    st.pipeline_latency = pick(rng, 0, 2);
    return st;
  }

  std::int64_t bits() { return 8 * pick(rng, 1, 8); }

  // Stage reading `tokens` per inference and writing the same count.
  std::size_t conserving(std::size_t from, std::int64_t tokens) {
    dataflow::Stage st = base("s");
    auto d = divisors(tokens);
    st.consume = d[static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(d.size()) - 1))];
    st.firings_per_inference = tokens / st.consume;
    if (st.firings_per_inference > 1 && pick(rng, 0, 1) == 1) {
      // Bursty output: a random composition of `tokens` over the firings.
      st.produce.assign(static_cast<std::size_t>(st.firings_per_inference), 0);
      for (std::int64_t t = 0; t < tokens; ++t) ++st.produce[static_cast<std::size_t>(pick(rng, 0, st.firings_per_inference - 1))];
    } else {
      st.produce = {st.consume};
    }
    const auto s = p.add_stage(st);
    p.connect(from, s, bits());
    --budget;
    return s;
  }

  // Up- or down-sampling stage; returns the new per-inference token count.
  std::size_t resampling(std::size_t from, std::int64_t& tokens) {
    dataflow::Stage st = base("r");
    auto d = divisors(tokens);
    st.consume = d[static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(d.size()) - 1))];
    st.firings_per_inference = tokens / st.consume;
    const std::int64_t cap = std::max<std::int64_t>(1, 24 / st.firings_per_inference);
    st.produce = {pick(rng, 1, std::min<std::int64_t>(3, cap))};
    tokens = st.produce[0] * st.firings_per_inference;
    const auto s = p.add_stage(st);
    p.connect(from, s, bits());
    --budget;
    return s;
  }

  std::size_t fork_join(std::size_t from, std::int64_t tokens) {
    dataflow::Stage fork = base("fork");
    fork.kind = dataflow::StageKind::kFork;
    fork.firings_per_inference = tokens;
    fork.cycles_per_firing = 1;
    const auto f = p.add_stage(fork);
    p.connect(from, f, bits());
    --budget;
    std::size_t tails[2];
    for (auto& tail : tails) {
      tail = f;
      const std::int64_t len = pick(rng, 0, std::min(2, std::max(0, budget - 2)));
      for (std::int64_t i = 0; i < len; ++i) tail = conserving(tail, tokens);
    }
    dataflow::Stage join = base("join");
    auto d = divisors(tokens);
    join.consume = d[static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(d.size()) - 1))];
    join.firings_per_inference = tokens / join.consume;
    join.produce = {join.consume};
    const auto j = p.add_stage(join);
    p.connect(tails[0], j, bits());
    p.connect(tails[1], j, bits());
    --budget;
    return j;
  }
};

}  // namespace

dataflow::Pipeline random_pipeline(std::mt19937_64& rng, int max_stages) {
  PipelineGen gen{rng, {}, static_cast<int>(pick(rng, 2, max_stages))};
  static const std::int64_t kTokens[] = {1, 4, 6, 8, 12, 16};
  std::int64_t tokens = kTokens[pick(rng, 0, 5)];
  dataflow::Stage src;
  src.kind = dataflow::StageKind::kSource;
  src.name = "src";
  src.consume = 0;
  src.firings_per_inference = tokens;
  std::size_t tail = gen.p.add_stage(src);
  while (gen.budget > 0) {
    const auto choice = pick(rng, 0, 5);
    if (choice <= 1 && gen.budget >= 3) tail = gen.fork_join(tail, tokens);
    else if (choice == 2) tail = gen.resampling(tail, tokens);
    else tail = gen.conserving(tail, tokens);
  }
  gen.p.stages[tail].is_sink = true;
  gen.p.sink_token_elements[gen.p.stages[tail].name] = 1;
  return gen.p;
}

}  // namespace qflow::testing
