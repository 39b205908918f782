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

// Shared builders for the unit and acceptance tests.

#ifndef QFLOW_TESTS_FIXTURES_HPP_
#define QFLOW_TESTS_FIXTURES_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qflow/dataflow.hpp"
#include "qflow/ir.hpp"

namespace qflow::testing {

// Small imperative model builder. Every node gets a single output named
// "<node>_out" unless the caller passes one.
class GraphBuilder {
 public:
  explicit GraphBuilder(std::string name = "fixture", Flow flow = Flow::kFinn);

  std::string input(const std::string& name, Shape shape, DataType dtype);
  std::string codes(const std::string& name, Shape shape, DataType dtype,
                    std::vector<std::int64_t> values);
  std::string reals(const std::string& name, Shape shape, std::vector<double> values);
  std::string node(OpType op, const std::string& name, std::vector<std::string> inputs,
                   Attrs attrs = {}, std::string output = "");
  void output(const std::string& tensor);

  Model& model() { return m_; }
  Model build() const { return m_; }

 private:
  Model m_;
};

Attrs quant_attrs(const std::string& scale, DataType dtype,
                  const std::string& rounding = "ROUND_HALF_UP", std::int64_t zero_point = 0);

// Copy of `m` with every integer-backed Linear weight and bias replaced by
// its FLOAT32 real value.
Model dequantize_weights(const Model& m);

// Float Dense or Conv2D followed by a BatchNorm with random statistics.
Model random_linear_bn(std::mt19937_64& rng, bool conv);

// Dense(INT8 input, INT<wbits> weights, optional bias) -> [BN] -> [ReLU] ->
// Quant(out). The quantizer scale is chosen so the output range is used.
struct ToyLayerSpec {
  std::int64_t in = 1;
  std::int64_t out = 4;
  int weight_bits = 4;
  bool bias = true;
  bool batchnorm = true;
  bool relu = true;
  DataType input_dtype = DataType::int_type(8);
  DataType quant_dtype = DataType::uint_type(3);
};
Model random_toy_layer(std::mt19937_64& rng, const ToyLayerSpec& spec);

// Fork -> {short edge, long branch} -> join. The long branch holds back its
// first `branch_latency` tokens before emitting, so the short edge must be at
// least that deep or the fork stalls forever.
dataflow::Pipeline fork_join_pipeline(std::int64_t branch_latency, std::int64_t tokens = 16);
// Name of the short (fork -> join) edge in fork_join_pipeline.
inline constexpr const char* kShortEdge = "fork->join";
dataflow::FifoPlan fork_join_plan(const dataflow::Pipeline& p, std::int64_t short_depth);

// Integer model with a 3x3 padded conv whose output joins its own input.
Model skip_connection_model();

// Random chain / fork / join pipeline with at most `max_stages` compute stages
// and balanced token counts.
dataflow::Pipeline random_pipeline(std::mt19937_64& rng, int max_stages = 12);

}  // namespace qflow::testing

#endif  // QFLOW_TESTS_FIXTURES_HPP_
