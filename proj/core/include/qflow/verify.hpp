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

#ifndef QFLOW_VERIFY_HPP_
#define QFLOW_VERIFY_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

#include "qflow/exec.hpp"

namespace qflow {

// How two models' outputs are compared.
//   kExact     bit-equal values
//   kRelative  max |a - b| <= tol * max(|a|, |b|) over each output vector
//   kArgmax    same predicted index (a [1] output is taken as the index)
enum class Tolerance { kExact, kRelative, kArgmax };
std::string_view to_string(Tolerance t);
std::optional<Tolerance> parse_tolerance(std::string_view text);

// One random value per input element, uniform over the dtype's codes
// (FLOAT32 draws from [-1, 1]).
ExecValue random_inputs(const Model& m, std::mt19937_64& rng);

struct VerifyOptions {
  int samples = 100;
  std::uint64_t seed = 1;
  std::optional<Tolerance> tolerance;  // chosen from the models when unset
  double relative_tolerance = 1e-6;
};

struct VerifyResult {
  Tolerance tolerance = Tolerance::kExact;
  ExecMode mode_a = ExecMode::kFloat;
  ExecMode mode_b = ExecMode::kFloat;
  int samples = 0;
  int mismatches = 0;
  double max_abs_deviation = 0.0;
  double max_rel_deviation = 0.0;
  int argmax_agreements = 0;
  std::optional<ExecValue> counterexample;  // first failing input
  int counterexample_index = -1;

  bool passed() const { return mismatches == 0; }
};

// Runs both models on the same seeded inputs. Each model uses exact_int mode
// when it supports it, float otherwise. Throws SchemaError when the input
// signatures differ.
VerifyResult verify_models(const Model& a, const Model& b, const VerifyOptions& options);

}  // namespace qflow

#endif  // QFLOW_VERIFY_HPP_
