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

#include "qflow/dataflow.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <tuple>

namespace qflow::dataflow {

std::string_view to_string(StageKind kind) {
  switch (kind) {
    case StageKind::kSource: return "source";
    case StageKind::kCompute: return "compute";
    case StageKind::kFork: return "fork";
  }
  return "?";
}

std::int64_t Stage::produce_at(std::int64_t firing) const {
  if (produce.size() == 1) return produce.front();
  return produce[static_cast<std::size_t>(firing % firings_per_inference)];
}

std::int64_t Stage::tokens_per_inference() const {
  if (produce.size() == 1) return produce.front() * firings_per_inference;
  std::int64_t sum = 0;
  for (auto v : produce) sum += v;
  return sum;
}

std::size_t Pipeline::add_stage(Stage s) {
  stages.push_back(std::move(s));
  return stages.size() - 1;
}

std::size_t Pipeline::connect(std::size_t from, std::size_t to, std::int64_t token_bits) {
  std::string name = stages[from].name + "->" + stages[to].name;
  if (find_edge(name)) {
    int i = 1;
    while (find_edge(name + "#" + std::to_string(i))) ++i;
    name += "#" + std::to_string(i);
  }
  edges.push_back({name, from, to, token_bits});
  stages[from].outputs.push_back(edges.size() - 1);
  stages[to].inputs.push_back(edges.size() - 1);
  return edges.size() - 1;
}

std::int64_t Pipeline::stage_count() const {
  return std::count_if(stages.begin(), stages.end(),
                       [](const Stage& s) { return s.kind != StageKind::kSource; });
}

std::int64_t Pipeline::internal_fifo_count() const {
  return std::count_if(edges.begin(), edges.end(), [&](const Edge& e) {
    return stages[e.from].kind != StageKind::kSource;
  });
}

const Edge* Pipeline::find_edge(std::string_view name) const {
  for (const auto& e : edges)
    if (e.name == name) return &e;
  return nullptr;
}

// --- mapping ---------------------------------------------------------------------

namespace {

// A tensor as it streams between stages.
struct Stream {
  std::size_t stage = 0;
  std::int64_t tokens = 1;
  std::int64_t elements_per_token = 1;
  std::int64_t bits = 32;
  Shape shape;  // [C, H, W] while spatial
  bool spatial = false;
};

Stream make_stream(std::size_t stage, const TensorInfo& t) {
  Stream s;
  s.stage = stage;
  s.shape = t.shape;
  s.bits = t.dtype.bits();
  if (t.shape.size() == 3) {
    s.spatial = true;
    s.tokens = t.shape[1] * t.shape[2];
    s.elements_per_token = t.shape[0];
  } else {
    s.tokens = 1;
    s.elements_per_token = element_count(t.shape);
  }
  return s;
}

// Number of windows whose last raster input pixel is each input pixel.
std::vector<std::int64_t> window_pattern(std::int64_t h, std::int64_t w, std::int64_t k,
                                         std::int64_t stride, std::int64_t pad_top,
                                         std::int64_t pad_left, std::int64_t ho, std::int64_t wo) {
  std::vector<std::int64_t> count(static_cast<std::size_t>(h * w), 0);
  for (std::int64_t oh = 0; oh < ho; ++oh) {
    for (std::int64_t ow = 0; ow < wo; ++ow) {
      const std::int64_t r = std::clamp<std::int64_t>(oh * stride - pad_top + k - 1, 0, h - 1);
      const std::int64_t c = std::clamp<std::int64_t>(ow * stride - pad_left + k - 1, 0, w - 1);
      ++count[static_cast<std::size_t>(r * w + c)];
    }
  }
  if (std::all_of(count.begin(), count.end(), [](auto v) { return v == 1; })) return {1};
  return count;
}

}  // namespace

Pipeline map_to_pipeline(const Model& m, Flow mode) {
  (void)mode;  // both flows map the same way; sizing differs
  const auto info = infer_tensor_info(m);
  const auto order = topological_order(m);

  // Flatten is an alias: resolve every tensor to the tensor that actually streams.
  std::map<std::string, std::string> alias;
  auto origin = [&](std::string t) {
    for (auto it = alias.find(t); it != alias.end(); it = alias.find(t)) t = it->second;
    return t;
  };
  for (auto i : order) {
    const Node& n = m.nodes[i];
    if (n.op == OpType::kFlatten) alias[n.outputs[0]] = n.inputs[0];
  }
  auto data_inputs = [](const Node& n) -> std::size_t { return n.op == OpType::kAdd ? 2 : 1; };
  std::map<std::string, int> uses;
  for (auto i : order) {
    const Node& n = m.nodes[i];
    if (n.op == OpType::kFlatten) continue;
    for (std::size_t k = 0; k < data_inputs(n); ++k) ++uses[origin(n.inputs[k])];
  }

  Pipeline p;
  std::map<std::string, Stream> streams;
  // Consumers read from a fork when the stream has several readers.
  auto publish = [&](const std::string& tensor, Stream s) {
    if (uses[tensor] > 1) {
      Stage fork;
      fork.kind = StageKind::kFork;
      fork.name = "fork_" + tensor;
      fork.firings_per_inference = s.tokens;
      const std::size_t f = p.add_stage(fork);
      p.connect(s.stage, f, s.elements_per_token * s.bits);
      s.stage = f;
    }
    streams[tensor] = s;
  };

  for (const auto& in : m.inputs) {
    Stage src;
    src.kind = StageKind::kSource;
    src.name = in.name;
    Stream s = make_stream(0, info.at(in.name));
    src.consume = 0;
    src.firings_per_inference = s.tokens;
    s.stage = p.add_stage(src);
    publish(in.name, s);
  }

  for (auto i : order) {
    const Node& n = m.nodes[i];
    if (n.op == OpType::kFlatten) continue;
    if (n.op == OpType::kSoftmax) {
      throw UnmappableOp(n.name, n.name + ": Softmax has no streaming implementation; run remove-softmax first");
    }
    std::vector<Stream> in;
    for (std::size_t k = 0; k < data_inputs(n); ++k) {
      const std::string t = origin(n.inputs[k]);
      auto it = streams.find(t);
      if (it == streams.end()) {
        throw UnmappableOp(n.name, n.name + ": input '" + n.inputs[k] +
                                       "' is constant; run constant-fold first");
      }
      in.push_back(it->second);
    }
    const TensorInfo& out = info.at(n.outputs[0]);
    Stream x = in[0];
    Stage st;
    st.name = n.name;
    Stream y = make_stream(0, out);
    switch (n.op) {
      case OpType::kConv2D:
      case OpType::kMaxPool2D:
      case OpType::kAvgPool2D: {
        if (!x.spatial) {
          throw UnmappableOp(n.name, n.name + ": windowed op needs a pixel stream input");
        }
        const std::int64_t k = n.int_attr("kernel", 1);
        const bool conv = n.op == OpType::kConv2D;
        const std::int64_t s = n.int_attr("stride", conv ? 1 : k);
        auto pads = conv ? n.ints_attr("pads", {0, 0, 0, 0}) : std::vector<std::int64_t>{0, 0, 0, 0};
        st.firings_per_inference = x.tokens;
        st.produce = window_pattern(x.shape[1], x.shape[2], k, s, pads[0], pads[1], out.shape[1], out.shape[2]);
        st.cycles_per_firing = conv ? n.int_attr("reuse_factor", 1) : 1;
        break;
      }
      case OpType::kDense:
        st.consume = x.tokens;
        st.firings_per_inference = 1;
        st.cycles_per_firing = n.int_attr("reuse_factor", 1);
        break;
      case OpType::kArgMax:
        st.consume = x.tokens;
        st.firings_per_inference = 1;
        break;
      case OpType::kAdd:
        if (in[1].tokens != x.tokens) {
          throw UnmappableOp(n.name, n.name + ": Add operands stream different token counts");
        }
        [[fallthrough]];
      default:  // elementwise: BatchNorm, ReLU, Quant, MultiThreshold
        st.firings_per_inference = x.tokens;
        y.tokens = x.tokens;
        y.spatial = x.spatial;
        y.elements_per_token = element_count(out.shape) / x.tokens;
        break;
    }
    y.stage = p.add_stage(st);
    for (const auto& s : in) p.connect(s.stage, y.stage, s.elements_per_token * s.bits);
    publish(n.outputs[0], y);
  }

  for (const auto& o : m.outputs) {
    auto it = streams.find(origin(o));
    if (it == streams.end()) continue;
    // A forked output leaves from its producer, not from the fork.
    std::size_t s = it->second.stage;
    if (p.stages[s].kind == StageKind::kFork) s = p.edges[p.stages[s].inputs[0]].from;
    p.stages[s].is_sink = true;
    p.sink_token_elements[p.stages[s].name] = it->second.elements_per_token;
  }
  return p;
}

void assign_sequential_reuse(Model& m) {
  const auto info = infer_tensor_info(m);
  for (auto& n : m.nodes) {
    if (!is_linear(n.op)) continue;
    n.attrs["reuse_factor"] = element_count(info.at(n.inputs[1]).shape);
  }
}

// --- simulation ------------------------------------------------------------------

std::int64_t default_watchdog(const Pipeline& p) {
  std::int64_t sum = 0;
  for (const auto& s : p.stages) sum += s.cycles_per_firing + s.pipeline_latency;
  return 2 * std::max<std::int64_t>(sum, 1);
}

namespace {

std::vector<std::int64_t> plan_depths(const Pipeline& p, const FifoPlan& plan) {
  std::vector<std::int64_t> depth;
  for (const auto& e : p.edges) {
    auto it = plan.depths.find(e.name);
    if (it == plan.depths.end()) {
      throw PlanIncomplete(e.name, "FIFO plan has no depth for edge '" + e.name + "'");
    }
    if (it->second < 1) {
      throw PlanIncomplete(e.name, "FIFO depth for edge '" + e.name + "' must be at least 1");
    }
    depth.push_back(it->second);
  }
  return depth;
}

struct Deposit {
  std::int64_t time;
  std::size_t stage;
  std::int64_t amount;
  std::int64_t firing;
  bool operator>(const Deposit& o) const {
    return std::tie(time, stage, firing) > std::tie(o.time, o.stage, o.firing);
  }
};

}  // namespace

SimResult simulate(const Pipeline& p, const FifoPlan& plan, std::int64_t n_inferences,
                   std::optional<std::int64_t> watchdog) {
  if (n_inferences < 1) throw DomainError("n_inferences", "n_inferences must be at least 1");
  const auto depth = plan_depths(p, plan);
  const std::size_t ns = p.stages.size(), ne = p.edges.size();

  SimResult r;
  r.n_inferences = n_inferences;
  r.watchdog_cycles = watchdog.value_or(default_watchdog(p));
  std::vector<std::int64_t> resident(ne, 0), reserved(ne, 0), max_need(ne, 0);
  std::vector<std::int64_t> fired(ns, 0), busy_until(ns, 0), total(ns), stall(ns, 0), bp(ns, 0);
  std::vector<std::vector<std::int64_t>> done(ns);
  for (std::size_t s = 0; s < ns; ++s) total[s] = p.stages[s].firings_per_inference * n_inferences;

  std::priority_queue<Deposit, std::vector<Deposit>, std::greater<>> pending;
  std::int64_t t = 0, last = 0;
  enum class Wait { kNone, kInput, kOutput };
  std::vector<Wait> waiting(ns);
  while (true) {
    while (!pending.empty() && pending.top().time == t) {
      const Deposit d = pending.top();
      pending.pop();
      const Stage& st = p.stages[d.stage];
      for (auto e : st.outputs) {
        resident[e] += d.amount;
        reserved[e] -= d.amount;
      }
      if (st.is_sink) r.output_tokens += d.amount;
      if (d.firing % st.firings_per_inference == st.firings_per_inference - 1) {
        done[d.stage].push_back(t);
      }
      last = t;
    }
    for (std::size_t s = ns; s-- > 0;) {
      waiting[s] = Wait::kNone;
      if (fired[s] == total[s] || busy_until[s] > t) continue;
      const Stage& st = p.stages[s];
      const bool ready = std::all_of(st.inputs.begin(), st.inputs.end(),
                                     [&](auto e) { return resident[e] >= st.consume; });
      if (!ready) {
        waiting[s] = Wait::kInput;
        continue;
      }
      const std::int64_t amount = st.produce_at(fired[s]);
      const bool room = std::all_of(st.outputs.begin(), st.outputs.end(), [&](auto e) {
        return resident[e] + reserved[e] + amount <= depth[e];
      });
      if (!room) {
        waiting[s] = Wait::kOutput;
        continue;
      }
      for (auto e : st.outputs) {
        max_need[e] = std::max(max_need[e], resident[e] + reserved[e] + amount);
        reserved[e] += amount;
      }
      for (auto e : st.inputs) resident[e] -= st.consume;
      busy_until[s] = t + st.cycles_per_firing;
      pending.push({busy_until[s] + st.pipeline_latency, s, amount, fired[s]});
      ++fired[s];
    }

    std::int64_t next = -1;
    if (!pending.empty()) next = pending.top().time;
    for (std::size_t s = 0; s < ns; ++s) {
      if (fired[s] < total[s] && busy_until[s] > t && (next < 0 || busy_until[s] < next)) next = busy_until[s];
    }
    if (next < 0) break;
    for (std::size_t s = 0; s < ns; ++s) {
      if (waiting[s] == Wait::kNone) continue;
      stall[s] += next - t;
      if (waiting[s] == Wait::kOutput) bp[s] += next - t;
    }
    t = next;
  }

  for (std::size_t s = 0; s < ns; ++s) {
    if (fired[s] < total[s]) {
      r.deadlock = true;
      r.blocked_stages.push_back(p.stages[s].name);
    }
    r.stall_cycles[p.stages[s].name] = stall[s];
    r.backpressure_cycles[p.stages[s].name] = bp[s];
  }
  for (std::size_t e = 0; e < ne; ++e) {
    r.max_occupancy[p.edges[e].name] = std::max<std::int64_t>(max_need[e] - 1, 0);
  }
  r.total_cycles = r.deadlock ? last + r.watchdog_cycles : last;

  // An inference is complete when every sink has emitted its last token.
  std::vector<std::size_t> sinks;
  for (std::size_t s = 0; s < ns; ++s)
    if (p.stages[s].is_sink) sinks.push_back(s);
  if (sinks.empty() && ns > 0) sinks.push_back(ns - 1);
  for (std::int64_t i = 0; i < n_inferences && !r.deadlock; ++i) {
    std::int64_t when = 0;
    for (auto s : sinks) when = std::max(when, done[s].at(static_cast<std::size_t>(i)));
    r.inference_done.push_back(when);
  }
  if (r.total_cycles > 0) {
    r.throughput_tokens_per_cycle =
        static_cast<double>(r.output_tokens) / static_cast<double>(r.total_cycles);
  }
  return r;
}

FifoPlan unbounded_plan(const Pipeline& p, std::int64_t n_inferences, Flow mode) {
  FifoPlan plan{mode, {}};
  for (const auto& e : p.edges) {
    plan.depths[e.name] = p.stages[e.from].tokens_per_inference() * n_inferences + 1;
  }
  return plan;
}

std::int64_t next_power_of_two(std::int64_t v) {
  std::int64_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

SizingResult size_fifos(const Pipeline& p, std::int64_t n_inferences, Flow mode) {
  SizingResult out;
  out.unbounded = simulate(p, unbounded_plan(p, n_inferences, mode), n_inferences);
  if (out.unbounded.deadlock) {
    throw DeadlockedResult("", "pipeline stalls even with unbounded FIFOs (token counts do not balance)");
  }
  out.plan.mode = mode;
  for (const auto& e : p.edges) {
    const std::int64_t d = out.unbounded.max_occupancy.at(e.name) + 1;
    // FINN stream FIFOs start at depth 2.
    out.plan.depths[e.name] = mode == Flow::kFinn ? next_power_of_two(std::max<std::int64_t>(d, 2)) : d;
  }
  out.sized = simulate(p, out.plan, n_inferences);
  if (out.sized.deadlock || out.sized.total_cycles != out.unbounded.total_cycles) {
    throw SizingUnstable("", "sized FIFOs take " + std::to_string(out.sized.total_cycles) +
                                 " cycles, unbounded run took " +
                                 std::to_string(out.unbounded.total_cycles));
  }
  return out;
}

LatencyReport latency(const SimResult& r, const ClockConfig& clock) {
  if (r.deadlock) {
    throw DeadlockedResult("", "latency of a deadlocked simulation is undefined");
  }
  if (!(clock.frequency_hz > 0.0)) throw DomainError("clock", "clock frequency must be positive");
  LatencyReport l;
  l.cycles_per_inference = static_cast<double>(r.total_cycles) / static_cast<double>(r.n_inferences);
  l.seconds = l.cycles_per_inference / clock.frequency_hz;
  const auto& d = r.inference_done;
  l.initiation_interval_cycles = d.size() >= 2 ? static_cast<double>(d.back() - d.front()) /
                                                     static_cast<double>(d.size() - 1)
                                               : l.cycles_per_inference;
  if (l.initiation_interval_cycles > 0.0) {
    l.throughput_inferences_per_second = clock.frequency_hz / l.initiation_interval_cycles;
  }
  return l;
}

double bench_median(const Pipeline& p, const FifoPlan& plan, const ClockConfig& clock,
                    int samples, std::int64_t min_window_cycles) {
  if (samples < 1) throw DomainError("samples", "bench needs at least one sample");
  std::vector<double> per_sample;
  for (int i = 0; i < samples; ++i) {
    std::int64_t elapsed = 0, count = 0;
    do {
      const SimResult r = simulate(p, plan, 1);
      if (r.deadlock) throw DeadlockedResult("", "bench run deadlocked");
      elapsed += r.total_cycles;
      ++count;
      if (r.total_cycles == 0) break;
    } while (elapsed < min_window_cycles);
    per_sample.push_back(static_cast<double>(elapsed) / static_cast<double>(count) /
                         clock.frequency_hz);
  }
  std::sort(per_sample.begin(), per_sample.end());
  const std::size_t mid = per_sample.size() / 2;
  return per_sample.size() % 2 ? per_sample[mid] : 0.5 * (per_sample[mid - 1] + per_sample[mid]);
}

std::int64_t fifo_memory_bits(const FifoPlan& plan, const Pipeline& p) {
  const auto depth = plan_depths(p, plan);
  std::int64_t bits = 0;
  for (std::size_t e = 0; e < p.edges.size(); ++e) bits += depth[e] * p.edges[e].token_bits;
  return bits;
}

}  // namespace qflow::dataflow
