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

#ifndef QFLOW_PASSES_HPP_
#define QFLOW_PASSES_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qflow/ir.hpp"

namespace qflow::passes {

enum class EquivalenceStatus { kNotChecked, kPassed, kFailed };
std::string_view to_string(EquivalenceStatus status);

struct PassReport {
  std::string pass;
  std::int64_t removed = 0;
  std::int64_t added = 0;
  std::int64_t rewritten = 0;
  EquivalenceStatus equivalence = EquivalenceStatus::kNotChecked;

  std::int64_t rewrites() const { return removed + added + rewritten; }
};

using PassResult = std::pair<Model, PassReport>;

// Replaces every node whose inputs are all initializers by its value.
PassResult constant_fold(const Model& m);

// Folds BatchNorm into a preceding float-weight Dense/Conv2D:
//   W' = v * W,  b' = v * (b - mean) + beta,  v = gamma / sqrt(var + eps).
// Integer-weight layers keep their BatchNorm for streamline().
PassResult fold_bn(const Model& m);

// Rewrites Linear -> [BatchNorm] -> [ReLU] -> Quant into an integer Linear
// followed by MultiThreshold. In the finn flow every such chain is rewritten;
// hls4ml keeps integer-only chains and only rewrites ones with a BatchNorm.
// Throws NotStreamlinable if a BatchNorm or FLOAT32 edge survives.
PassResult streamline(const Model& m);

// Fuses a ReLU into the Dense/Conv2D feeding it.
PassResult merge_relu(const Model& m);

// Replaces a terminal Softmax with ArgMax. Throws PatternNotFound if there is
// no Softmax or it feeds anything other than a graph output.
PassResult remove_softmax(const Model& m);

// Sets each integer Linear's acc_dtype to the narrowest signed INT covering
// its worst-case accumulator range.
PassResult minimize_accumulators(const Model& m);

// Stable identifiers: constant-fold, fold-bn, streamline, merge-relu,
// remove-softmax, min-accum.
const std::vector<std::string>& pass_names();
bool is_pass_name(std::string_view name);
const std::vector<std::string>& default_pipeline();
PassResult run_pass(const Model& m, std::string_view name);

// Applies the named passes in order and validates the result. Errors are
// rethrown as PipelineError carrying the failing pass index and name.
std::pair<Model, std::vector<PassReport>> run_pipeline(const Model& m,
                                                       const std::vector<std::string>& names);

// Per-channel worst-case accumulator range of an integer Linear node, as
// codes at the node's output scale (bias included). Empty if not integer.
std::vector<std::pair<std::int64_t, std::int64_t>> accumulator_ranges(const Model& m,
                                                                      const Node& linear);

}  // namespace qflow::passes

#endif  // QFLOW_PASSES_HPP_
