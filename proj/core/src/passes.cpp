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

#include "qflow/passes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pass_util.hpp"
#include "qflow/exec.hpp"

namespace qflow::passes {

namespace detail {

std::string fresh_tensor_name(const Model& m, const std::string& base) {
  std::set<std::string> used;
  for (const auto& in : m.inputs) used.insert(in.name);
  for (const auto& [name, t] : m.initializers) used.insert(name);
  for (const auto& n : m.nodes) used.insert(n.outputs.begin(), n.outputs.end());
  if (!used.count(base)) return base;
  for (int i = 1;; ++i) {
    std::string candidate = base + "_" + std::to_string(i);
    if (!used.count(candidate)) return candidate;
  }
}

std::string fresh_node_name(const Model& m, const std::string& base) {
  if (!m.find_node(base)) return base;
  for (int i = 1;; ++i) {
    std::string candidate = base + "_" + std::to_string(i);
    if (!m.find_node(candidate)) return candidate;
  }
}

bool single_use(const Model& m, const std::map<std::string, std::vector<std::size_t>>& consumers,
                const std::string& tensor) {
  auto it = consumers.find(tensor);
  return it != consumers.end() && it->second.size() == 1 && !m.is_graph_output(tensor);
}

void erase_nodes(Model& m, const std::set<std::size_t>& drop) {
  std::vector<Node> kept;
  kept.reserve(m.nodes.size());
  for (std::size_t i = 0; i < m.nodes.size(); ++i)
    if (!drop.count(i)) kept.push_back(std::move(m.nodes[i]));
  m.nodes = std::move(kept);
}

std::vector<std::pair<std::int64_t, std::int64_t>> accumulator_ranges(
    const Model& m, const Node& linear, const std::map<std::string, TensorInfo>& info) {
  if (!is_linear(linear.op)) return {};
  const DataType xd = info.at(linear.inputs[0]).dtype;
  const Tensor* w = m.find_initializer(linear.inputs[1]);
  const Tensor* b = linear.inputs.size() == 3 ? m.find_initializer(linear.inputs[2]) : nullptr;
  if (xd.is_float() || !w || w->dtype.is_float()) return {};
  if (linear.inputs.size() == 3 && (!b || b->dtype.is_float())) return {};

  const int prod_frac = xd.frac_bits() + w->dtype.frac_bits();
  const int out_frac = b ? std::max(prod_frac, b->dtype.frac_bits()) : prod_frac;
  // Padded positions contribute zero, so zero is always a possible input.
  const std::int64_t xlo = std::min<std::int64_t>(xd.min_code(), 0);
  const std::int64_t xhi = std::max<std::int64_t>(xd.max_code(), 0);
  const std::int64_t channels = w->shape[0];
  const std::int64_t per = w->size() / channels;

  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (std::int64_t o = 0; o < channels; ++o) {
    std::int64_t lo = 0, hi = 0;
    for (std::int64_t i = 0; i < per; ++i) {
      const std::int64_t wc = w->ints[static_cast<std::size_t>(o * per + i)];
      lo += std::min(wc * xlo, wc * xhi);
      hi += std::max(wc * xlo, wc * xhi);
    }
    lo *= std::int64_t{1} << (out_frac - prod_frac);
    hi *= std::int64_t{1} << (out_frac - prod_frac);
    if (b) {
      const std::int64_t bc = b->ints[static_cast<std::size_t>(o)] *
                              (std::int64_t{1} << (out_frac - b->dtype.frac_bits()));
      lo += bc;
      hi += bc;
    }
    out.emplace_back(lo, hi);
  }
  return out;
}

}  // namespace detail

using detail::single_use;

std::string_view to_string(EquivalenceStatus status) {
  switch (status) {
    case EquivalenceStatus::kNotChecked: return "not-checked";
    case EquivalenceStatus::kPassed: return "passed";
    case EquivalenceStatus::kFailed: return "failed";
  }
  return "?";
}

std::vector<std::pair<std::int64_t, std::int64_t>> accumulator_ranges(const Model& m,
                                                                      const Node& linear) {
  return detail::accumulator_ranges(m, linear, infer_tensor_info(m));
}

// --- constant_fold -----------------------------------------------------------------

PassResult constant_fold(const Model& input) {
  Model m = input;
  PassReport report{"constant-fold"};
  auto info = infer_tensor_info(m);
  std::set<std::size_t> folded;
  for (auto i : topological_order(m)) {
    const Node& n = m.nodes[i];
    const std::string& out = n.outputs[0];
    if (m.is_graph_output(out)) continue;
    const bool all_const = std::all_of(n.inputs.begin(), n.inputs.end(),
                                       [&](const std::string& t) { return m.initializers.count(t) != 0; });
    if (!all_const) continue;
    const DataType od = info.at(out).dtype;
    if (!od.is_float() && !od.valid()) continue;  // no declarable type for the value

    Model sub;
    sub.name = n.name;
    sub.nodes = {n};
    sub.outputs = {out};
    for (const auto& t : n.inputs) sub.initializers[t] = m.initializers.at(t);
    const auto mode = od.is_float() ? ExecMode::kFloat : ExecMode::kExactInt;
    Tensor value = run(sub, {}, mode).at(out);
    value.dtype = od;
    m.initializers[out] = std::move(value);
    folded.insert(i);
  }
  detail::erase_nodes(m, folded);
  remove_unused_initializers(m);
  report.removed = static_cast<std::int64_t>(folded.size());
  return {std::move(m), report};
}

// --- fold_bn ---------------------------------------------------------------------

PassResult fold_bn(const Model& input) {
  Model m = input;
  PassReport report{"fold-bn"};
  const auto producers = producer_map(m);
  const auto consumers = consumer_map(m);
  std::set<std::size_t> drop;
  for (std::size_t bi = 0; bi < m.nodes.size(); ++bi) {
    const Node& bn = m.nodes[bi];
    if (bn.op != OpType::kBatchNorm) continue;
    auto pit = producers.find(bn.inputs[0]);
    if (pit == producers.end()) continue;
    Node& lin = m.nodes[pit->second];
    if (!is_linear(lin.op) || lin.bool_attr("fused_relu", false)) continue;
    if (!single_use(m, consumers, lin.outputs[0])) continue;
    const Tensor* w = m.find_initializer(lin.inputs[1]);
    if (!w || !w->dtype.is_float()) continue;
    const Tensor* b = lin.inputs.size() == 3 ? m.find_initializer(lin.inputs[2]) : nullptr;
    if (lin.inputs.size() == 3 && !b) continue;

    const auto channels = batchnorm_channels(m, bn);
    const auto per = static_cast<std::size_t>(w->size() / w->shape[0]);
    std::vector<double> wf = w->to_reals();
    std::vector<double> bf(channels.size(), 0.0);
    const std::vector<double> bias = b ? b->to_reals() : std::vector<double>(channels.size(), 0.0);
    for (std::size_t c = 0; c < channels.size(); ++c) {
      const double v = channels[c].multiplier();
      for (std::size_t i = 0; i < per; ++i) wf[c * per + i] *= v;
      bf[c] = v * (bias[c] - channels[c].mean) + channels[c].beta;
    }
    const std::string wname = detail::fresh_tensor_name(m, lin.name + "_W_folded");
    m.initializers[wname] = Tensor::from_reals(w->shape, std::move(wf));
    const std::string bname = detail::fresh_tensor_name(m, lin.name + "_b_folded");
    m.initializers[bname] = Tensor::from_reals({w->shape[0]}, std::move(bf));

    lin.inputs.resize(2);
    lin.inputs[1] = wname;
    lin.inputs.push_back(bname);
    lin.outputs[0] = bn.outputs[0];
    drop.insert(bi);
    ++report.rewritten;
  }
  detail::erase_nodes(m, drop);
  remove_unused_initializers(m);
  report.removed = static_cast<std::int64_t>(drop.size());
  return {std::move(m), report};
}

// --- merge_relu ------------------------------------------------------------------

PassResult merge_relu(const Model& input) {
  Model m = input;
  PassReport report{"merge-relu"};
  const auto producers = producer_map(m);
  const auto consumers = consumer_map(m);
  std::set<std::size_t> drop;
  for (std::size_t ri = 0; ri < m.nodes.size(); ++ri) {
    const Node& relu = m.nodes[ri];
    if (relu.op != OpType::kReLU) continue;
    auto pit = producers.find(relu.inputs[0]);
    if (pit == producers.end()) continue;
    Node& lin = m.nodes[pit->second];
    if (!is_linear(lin.op) || lin.bool_attr("fused_relu", false)) continue;
    if (!single_use(m, consumers, lin.outputs[0])) continue;
    lin.attrs["fused_relu"] = true;
    lin.outputs[0] = relu.outputs[0];
    drop.insert(ri);
    ++report.rewritten;
  }
  detail::erase_nodes(m, drop);
  report.removed = static_cast<std::int64_t>(drop.size());
  return {std::move(m), report};
}

// --- remove_softmax --------------------------------------------------------------

PassResult remove_softmax(const Model& input) {
  Model m = input;
  PassReport report{"remove-softmax"};
  const auto consumers = consumer_map(m);
  bool any = false;
  for (auto& n : m.nodes) {
    if (n.op != OpType::kSoftmax) continue;
    any = true;
    const std::string& out = n.outputs[0];
    if (!m.is_graph_output(out) || consumers.count(out)) {
      throw PatternNotFound(n.name, n.name + ": Softmax output feeds other nodes; only a terminal Softmax can be removed");
    }
  }
  if (!any) throw PatternNotFound("", "model has no terminal Softmax");
  for (auto& n : m.nodes) {
    if (n.op != OpType::kSoftmax) continue;
    n.name = detail::fresh_node_name(m, "argmax");
    n.op = OpType::kArgMax;
    n.attrs.clear();
    ++report.removed;
    ++report.added;
  }
  return {std::move(m), report};
}

// --- minimize_accumulators -------------------------------------------------------

PassResult minimize_accumulators(const Model& input) {
  Model m = input;
  PassReport report{"min-accum"};
  const auto info = infer_tensor_info(m);
  for (auto& n : m.nodes) {
    const auto ranges = detail::accumulator_ranges(m, n, info);
    if (ranges.empty()) continue;
    int bits = 1;
    for (const auto& [lo, hi] : ranges) bits = std::max(bits, signed_bits_for_range(lo, hi));
    if (bits > 32) continue;
    const std::string acc = DataType::int_type(bits).to_string();
    if (n.has_attr("acc_dtype") && n.string_attr("acc_dtype", "") == acc) continue;
    n.attrs["acc_dtype"] = acc;
    ++report.rewritten;
  }
  return {std::move(m), report};
}

// --- pipeline --------------------------------------------------------------------

const std::vector<std::string>& pass_names() {
  static const std::vector<std::string> kNames = {"constant-fold", "fold-bn",        "streamline",
                                                  "merge-relu",    "remove-softmax", "min-accum"};
  return kNames;
}

bool is_pass_name(std::string_view name) {
  const auto& names = pass_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

const std::vector<std::string>& default_pipeline() {
  static const std::vector<std::string> kDefault = {"constant-fold", "fold-bn", "streamline",
                                                    "merge-relu", "min-accum"};
  return kDefault;
}

PassResult run_pass(const Model& m, std::string_view name) {
  if (name == "constant-fold") return constant_fold(m);
  if (name == "fold-bn") return fold_bn(m);
  if (name == "streamline") return streamline(m);
  if (name == "merge-relu") return merge_relu(m);
  if (name == "remove-softmax") return remove_softmax(m);
  if (name == "min-accum") return minimize_accumulators(m);
  throw std::invalid_argument("unknown pass '" + std::string(name) + "'");
}

std::pair<Model, std::vector<PassReport>> run_pipeline(const Model& m,
                                                       const std::vector<std::string>& names) {
  Model current = m;
  std::vector<PassReport> reports;
  for (std::size_t i = 0; i < names.size(); ++i) {
    try {
      auto [next, report] = run_pass(current, names[i]);
      current = std::move(next);
      reports.push_back(std::move(report));
    } catch (const PipelineError&) {
      throw;
    } catch (const Error& e) {
      throw PipelineError(i, names[i], e);
    }
  }
  require_valid(current);
  return {std::move(current), std::move(reports)};
}

}  // namespace qflow::passes
