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

#ifndef QFLOW_EXEC_HPP_
#define QFLOW_EXEC_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qflow/ir.hpp"

namespace qflow {

// Reference interpreter.
//
//   kFloat     every value is a double; integer-typed edges carry their real
//              values (code * 2^exponent).
//   kExactInt  integer-typed edges carry exact int64 codes. FLOAT32 edges are
//              only allowed on chains that end in a Quant node (the
//              quantization boundary), and are evaluated in double.
enum class ExecMode { kFloat, kExactInt };

using ExecValue = std::map<std::string, Tensor>;

struct ExecOptions {
  ExecMode mode = ExecMode::kFloat;
  // Return every tensor, not just the declared outputs.
  bool keep_intermediates = false;
};

ExecValue run(const Model& m, const ExecValue& inputs, ExecMode mode);
ExecValue run(const Model& m, const ExecValue& inputs, const ExecOptions& options);

// Index of the largest element; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);
std::vector<double> softmax(std::span<const double> values);

enum class Rounding { kRoundHalfUp, kFloor };

// Scalar semantics of a Quant node, shared by the interpreter and the
// streamliner so both see bit-identical float behaviour.
struct QuantParams {
  Rational scale{1};
  std::int64_t zero_point = 0;
  DataType dtype = DataType::int_type(8);
  Rounding rounding = Rounding::kRoundHalfUp;

  static QuantParams from_node(const Node& n);

  // Code of the quantized value for a real input, evaluated in double.
  std::int64_t quantize(double x) const;
  // Same, exactly, for an input given as code * 2^exponent.
  std::int64_t quantize_exact(std::int64_t code, int exponent) const;
  // (q - zero_point) * scale.
  Rational dequantize(std::int64_t q) const;
  // Real value the node emits for code q (q * 2^dtype exponent).
  double output_real(std::int64_t q) const { return dtype.code_to_real(q); }
};

// One channel of a BatchNorm: y = v * (x - mean) + beta, v = gamma / sqrt(var + eps).
struct BatchNormChannel {
  double mean = 0.0;
  double var = 1.0;
  double gamma = 1.0;
  double beta = 0.0;
  double epsilon = 1e-5;

  double multiplier() const { return gamma / std::sqrt(var + epsilon); }
  double apply(double x) const { return multiplier() * (x - mean) + beta; }
};

std::vector<BatchNormChannel> batchnorm_channels(const Model& m, const Node& bn);

struct MultiThresholdParams {
  Tensor thresholds;  // [C, T] or [1, T], rows non-decreasing
  Rational out_scale{1};
  Rational out_bias{0};
  DataType out_dtype = DataType::int_type(8);

  static MultiThresholdParams from_node(const Model& m, const Node& n);

  std::int64_t rows() const { return thresholds.shape[0]; }
  std::int64_t columns() const { return thresholds.shape[1]; }
  // Number of thresholds t in row `row` with x >= t.
  std::int64_t count(std::int64_t row, double x) const;
};

// Saturating cast of a real value into dtype's representable set.
double cast_real(double value, DataType dtype);

}  // namespace qflow

#endif  // QFLOW_EXEC_HPP_
