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

#include <gtest/gtest.h>

#include "qflow/exec.hpp"
#include "qflow/zoo.hpp"

namespace qflow {
namespace {

ExecValue zero_inputs(const Model& m) {
  ExecValue in;
  for (const auto& d : m.inputs) {
    if (d.dtype.is_float()) {
      in[d.name] = Tensor::from_reals(d.shape, std::vector<double>(static_cast<std::size_t>(element_count(d.shape)), 0.0));
    } else {
      std::int64_t zero = d.dtype.contains_code(0) ? 0 : 1;
      in[d.name] = Tensor::from_codes(d.shape, d.dtype,
                                      std::vector<std::int64_t>(static_cast<std::size_t>(element_count(d.shape)), zero));
    }
  }
  return in;
}

TEST(Zoo, CnvParameterCount) { EXPECT_EQ(count_params(zoo::build(zoo::ZooId::kCnvW1A1)), 1542848); }

TEST(Zoo, KwsParameterCount) { EXPECT_EQ(count_params(zoo::build(zoo::ZooId::kKwsMlp)), 259584); }

// 490h + 2h^2 + 12h = 259584 has exactly one positive integer root.
TEST(Zoo, KwsHiddenWidthIsTheUniqueSolution) {
  int solutions = 0;
  for (std::int64_t h = 1; h < 1000; ++h) {
    if (490 * h + 2 * h * h + 12 * h == 259584) {
      EXPECT_EQ(h, 256);
      ++solutions;
    }
  }
  EXPECT_EQ(solutions, 1);
}

TEST(Zoo, EveryModelValidatesAndRunsOnZeroInput) {
  for (auto id : zoo::all_ids()) {
    zoo::ZooSpec spec{id};
    if (id == zoo::ZooId::kCnvW1A1) spec.width_scale = Rational(1, 8);
    const Model m = zoo::build(spec);
    EXPECT_TRUE(validate(m).empty()) << zoo::to_string(id);
    EXPECT_NO_THROW(run(m, zero_inputs(m), ExecMode::kFloat)) << zoo::to_string(id);
  }
}

TEST(Zoo, CnvSpatialTrace) {
  const Model m = zoo::build(zoo::ZooSpec{zoo::ZooId::kCnvW1A1, Rational(1, 8)});
  const auto info = infer_tensor_info(m);
  std::vector<std::int64_t> trace{m.inputs[0].shape[1]};
  for (const auto& n : m.nodes) {
    const auto& s = info.at(n.outputs[0]).shape;
    if (s.size() == 3 && s[1] != trace.back()) trace.push_back(s[1]);
  }
  EXPECT_EQ(trace, (std::vector<std::int64_t>{32, 30, 28, 14, 12, 10, 5, 3, 1}));
}

TEST(Zoo, CnvUsesBipolarWeightsAndAnEightBitInput) {
  const Model m = zoo::build(zoo::ZooSpec{zoo::ZooId::kCnvW1A1, Rational(1, 8)});
  EXPECT_EQ(m.inputs[0].dtype, DataType::uint_type(8));
  for (const auto& n : m.nodes) {
    if (is_linear(n.op)) {
      EXPECT_EQ(m.initializers.at(n.inputs[1]).dtype, DataType::bipolar()) << n.name;
      EXPECT_EQ(n.inputs.size(), 2u) << n.name << " has a bias";
    }
  }
  EXPECT_EQ(m.nodes.back().op, OpType::kArgMax);
}

TEST(Zoo, IcCnnTopology) {
  const Model m = zoo::build(zoo::ZooId::kIcCnn);
  std::vector<std::int64_t> filters, kernels, strides;
  for (const auto& n : m.nodes) {
    if (n.op != OpType::kConv2D) continue;
    filters.push_back(m.initializers.at(n.inputs[1]).shape[0]);
    kernels.push_back(n.int_attr("kernel", 0));
    strides.push_back(n.int_attr("stride", 1));
  }
  EXPECT_EQ(filters, (std::vector<std::int64_t>{32, 4, 32, 32, 4}));
  EXPECT_EQ(kernels, (std::vector<std::int64_t>{1, 4, 4, 4, 4}));
  EXPECT_EQ(strides, (std::vector<std::int64_t>{1, 1, 1, 4, 1}));
  EXPECT_EQ(m.nodes.back().op, OpType::kSoftmax);
  EXPECT_EQ(m.flow, Flow::kHls4ml);
}

TEST(Zoo, AutoencoderIsParameterized) {
  zoo::ZooSpec spec{zoo::ZooId::kAdAe};
  spec.ad_hidden_layers = 2;
  spec.ad_hidden_width = 16;
  const Model m = zoo::build(spec);
  EXPECT_TRUE(validate(m).empty());
  EXPECT_EQ(infer_tensor_info(m).at(m.outputs[0]).shape, (Shape{128}));
  EXPECT_LT(count_params(m), count_params(zoo::build(zoo::ZooId::kAdAe)));
}

TEST(Zoo, WidthScaleTooSmallIsUnsupported) {
  EXPECT_THROW(zoo::build(zoo::ZooSpec{zoo::ZooId::kKwsMlp, Rational(1, 1024)}), UnsupportedScale);
}

TEST(Zoo, SeedDeterminesWeights) {
  zoo::ZooSpec a{zoo::ZooId::kKwsMlp, Rational(1, 8)};
  zoo::ZooSpec b = a;
  b.seed = 99;
  EXPECT_EQ(zoo::build(a), zoo::build(a));
  EXPECT_NE(zoo::build(a), zoo::build(b));
}

TEST(Zoo, IdNames) {
  for (auto id : zoo::all_ids()) EXPECT_EQ(zoo::parse_zoo_id(zoo::to_string(id)), id);
  EXPECT_FALSE(zoo::parse_zoo_id("BOGUS"));
}

}  // namespace
}  // namespace qflow
