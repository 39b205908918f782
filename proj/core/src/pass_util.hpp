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

#ifndef QFLOW_SRC_PASS_UTIL_HPP_
#define QFLOW_SRC_PASS_UTIL_HPP_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "qflow/ir.hpp"

namespace qflow::passes::detail {

// A tensor name not yet used by the model.
std::string fresh_tensor_name(const Model& m, const std::string& base);
// A node name not yet used by the model.
std::string fresh_node_name(const Model& m, const std::string& base);

// True if `tensor` feeds exactly one node and is not a graph output.
bool single_use(const Model& m, const std::map<std::string, std::vector<std::size_t>>& consumers,
                const std::string& tensor);

// Copies `m` without the nodes whose indices are in `drop`.
void erase_nodes(Model& m, const std::set<std::size_t>& drop);

std::vector<std::pair<std::int64_t, std::int64_t>> accumulator_ranges(
    const Model& m, const Node& linear, const std::map<std::string, TensorInfo>& info);

}  // namespace qflow::passes::detail

#endif  // QFLOW_SRC_PASS_UTIL_HPP_
