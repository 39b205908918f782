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

#ifndef QFLOW_SERIALIZE_HPP_
#define QFLOW_SERIALIZE_HPP_

#include <map>
#include <string>
#include <string_view>

#include "qflow/ir.hpp"

namespace qflow {

// Parses a model document. Throws SchemaError for malformed documents and
// ValidationError when the model breaks an IR invariant.
Model parse_model(std::string_view text);

// Parses without running validate(); used by tools that report diagnostics.
Model parse_model_unchecked(std::string_view text);

// Deterministic text form: keys sorted, nodes in declaration order.
std::string serialize_model(const Model& m);

// Named tensor collections (exec inputs/outputs) in the initializer encoding.
std::map<std::string, Tensor> parse_tensors(std::string_view text);
std::string serialize_tensors(const std::map<std::string, Tensor>& tensors);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace qflow

#endif  // QFLOW_SERIALIZE_HPP_
