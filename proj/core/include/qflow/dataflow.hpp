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

#ifndef QFLOW_DATAFLOW_HPP_
#define QFLOW_DATAFLOW_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qflow/ir.hpp"

namespace qflow::dataflow {

enum class StageKind { kSource, kCompute, kFork };
std::string_view to_string(StageKind kind);

struct Stage {
  StageKind kind = StageKind::kCompute;
  std::string name;
  // Tokens taken from every input FIFO per firing.
  std::int64_t consume = 1;
  // Tokens written to every output FIFO. Either one value for all firings or
  // one value per firing index within an inference (sliding windows emit
  // nothing until their first window is complete).
  std::vector<std::int64_t> produce{1};
  std::int64_t firings_per_inference = 1;
  std::int64_t cycles_per_firing = 1;
  // Extra cycles between the end of a firing and its tokens becoming visible.
  std::int64_t pipeline_latency = 0;
  std::vector<std::size_t> inputs;   // edge indices
  std::vector<std::size_t> outputs;  // edge indices
  // Tokens leaving the pipeline per inference (graph outputs).
  bool is_sink = false;

  std::int64_t produce_at(std::int64_t firing) const;
  std::int64_t tokens_per_inference() const;
};

struct Edge {
  std::string name;  // "producer->consumer"
  std::size_t from = 0;
  std::size_t to = 0;
  std::int64_t token_bits = 0;
};

// Stages are stored in topological order.
struct Pipeline {
  std::vector<Stage> stages;
  std::vector<Edge> edges;
  // Element count of each token leaving a sink stage.
  std::map<std::string, std::int64_t> sink_token_elements;

  // Stage and edge builders keep the adjacency lists in sync.
  std::size_t add_stage(Stage s);
  std::size_t connect(std::size_t from, std::size_t to, std::int64_t token_bits);

  // Non-source stages.
  std::int64_t stage_count() const;
  // Edges whose producer is not a source.
  std::int64_t internal_fifo_count() const;
  const Edge* find_edge(std::string_view name) const;
};

// One stage per non-fused node. Flatten is free (the consumer reads the
// producer's stream), forks are inserted for tensors with several consumers,
// Add is the join. Throws UnmappableOp for Softmax and constant subgraphs.
Pipeline map_to_pipeline(const Model& m, Flow mode);

// Sets reuse_factor to the fully sequential value: n*k*k*m for Conv2D and
// n*m for Dense (one multiplier).
void assign_sequential_reuse(Model& m);

struct FifoPlan {
  Flow mode = Flow::kHls4ml;
  std::map<std::string, std::int64_t> depths;
};

struct SimResult {
  std::int64_t total_cycles = 0;
  std::int64_t n_inferences = 0;
  std::map<std::string, std::int64_t> max_occupancy;
  std::map<std::string, std::int64_t> stall_cycles;         // idle with work left
  std::map<std::string, std::int64_t> backpressure_cycles;  // inputs ready, output full
  bool deadlock = false;
  std::vector<std::string> blocked_stages;
  std::int64_t watchdog_cycles = 0;
  std::int64_t output_tokens = 0;
  std::vector<std::int64_t> inference_done;  // completion cycle of each inference
  double throughput_tokens_per_cycle = 0.0;
};

// 2 x the sum over stages of one firing's worst-case cycles.
std::int64_t default_watchdog(const Pipeline& p);

// Cycle-level token simulation. Each cycle, first completed firings deposit
// their tokens, then stages are visited consumers-first; a stage fires if it
// is idle, every input holds >= consume tokens, and every output has room
// for its produce count (resident + in flight + produce <= depth).
// max_occupancy of an edge is the largest resident + in flight count seen by
// a producer about to write, before its own tokens; depth = max_occupancy + 1
// is therefore exactly enough to replay the run. Throws PlanIncomplete.
SimResult simulate(const Pipeline& p, const FifoPlan& plan, std::int64_t n_inferences,
                   std::optional<std::int64_t> watchdog = std::nullopt);

// Depth that can never block: every token produced over the run, plus one.
FifoPlan unbounded_plan(const Pipeline& p, std::int64_t n_inferences, Flow mode);

struct SizingResult {
  FifoPlan plan;
  SimResult unbounded;
  SimResult sized;
};

// Phase 1: simulate unbounded. Phase 2: depth = max_occupancy + 1 (hls4ml)
// or the next power of two (finn). Phase 3: re-simulate; throws
// SizingUnstable if the cycle count moved.
SizingResult size_fifos(const Pipeline& p, std::int64_t n_inferences, Flow mode);

struct ClockConfig {
  double frequency_hz = 100e6;
};

struct LatencyReport {
  double cycles_per_inference = 0.0;
  double seconds = 0.0;
  double initiation_interval_cycles = 0.0;
  double throughput_inferences_per_second = 0.0;
};

// Throws DeadlockedResult and DomainError (non-positive clock).
LatencyReport latency(const SimResult& r, const ClockConfig& clock);

// Median over `samples` of the per-inference latency, each sample running
// batch-1 inferences back to back until min_window_cycles have elapsed.
double bench_median(const Pipeline& p, const FifoPlan& plan, const ClockConfig& clock,
                    int samples = 5, std::int64_t min_window_cycles = 100000);

// Sum over edges of depth x token bits. Throws PlanIncomplete.
std::int64_t fifo_memory_bits(const FifoPlan& plan, const Pipeline& p);

std::int64_t next_power_of_two(std::int64_t v);

}  // namespace qflow::dataflow

#endif  // QFLOW_DATAFLOW_HPP_
