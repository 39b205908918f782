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

#include <algorithm>

#include "fixtures.hpp"
#include "qflow/ir.hpp"

namespace qflow {
namespace {

using testing::GraphBuilder;

bool has_rule(const std::vector<Diagnostic>& d, const std::string& rule, const std::string& subject = "") {
  return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) {
    return x.rule == rule && (subject.empty() || x.subject == subject);
  });
}

Model dense_4_3(bool bias) {
  GraphBuilder g;
  auto x = g.input("x", {4}, DataType::int_type(8));
  g.codes("W", {3, 4}, DataType::int_type(4), std::vector<std::int64_t>(12, 1));
  std::vector<std::string> in{x, "W"};
  if (bias) in.push_back(g.codes("b", {3}, DataType::int_type(8), {1, 2, 3}));
  g.output(g.node(OpType::kDense, "fc", in));
  return g.build();
}

TEST(Validate, AcceptsMinimalDense) {
  const Model m = dense_4_3(true);
  EXPECT_TRUE(validate(m).empty());
  EXPECT_EQ(count_params(m), 15);
}

TEST(Validate, ConvStrideZeroIsOneDiagnostic) {
  GraphBuilder g;
  auto x = g.input("x", {1, 4, 4}, DataType::int_type(8));
  g.codes("W", {1, 1, 3, 3}, DataType::int_type(2), std::vector<std::int64_t>(9, 1));
  g.output(g.node(OpType::kConv2D, "conv", {x, "W"}, {{"kernel", std::int64_t{3}}, {"stride", std::int64_t{0}}}));
  const auto d = validate(g.build());
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].rule, "stride≥1");
  EXPECT_EQ(d[0].subject, "conv");
}

TEST(Validate, CycleIsNotADag) {
  GraphBuilder g;
  auto x = g.input("x", {2}, DataType::int_type(8));
  g.node(OpType::kAdd, "a", {x, "b_out"});
  g.node(OpType::kReLU, "b", {"a_out"});
  g.output("b_out");
  const auto d = validate(g.build());
  ASSERT_TRUE(has_rule(d, "dag"));
  EXPECT_NE(d.front().message.find("not a DAG"), std::string::npos);
  EXPECT_THROW(topological_order(g.build()), ValidationError);
}

TEST(Validate, DanglingTensorIsNamed) {
  GraphBuilder g;
  g.input("x", {2}, DataType::int_type(8));
  g.output(g.node(OpType::kReLU, "r", {"ghost"}));
  const auto d = validate(g.build());
  EXPECT_TRUE(has_rule(d, "dangling-input", "ghost"));
}

TEST(Validate, UnknownAndMissingAttributes) {
  GraphBuilder g;
  auto x = g.input("x", {2}, DataType::float32());
  g.output(g.node(OpType::kQuant, "q", {x}, {{"dtype", std::string("INT4")}, {"colour", std::string("red")}}));
  const auto d = validate(g.build());
  EXPECT_TRUE(has_rule(d, "attr-unknown", "q"));
  EXPECT_TRUE(has_rule(d, "attr-missing", "q"));
}

TEST(Validate, InitializerOutsideDomain) {
  Model m = dense_4_3(false);
  m.initializers.at("W").ints[0] = 8;  // INT4 stops at 7
  EXPECT_TRUE(has_rule(validate(m), "data-domain", "W"));
  m = dense_4_3(false);
  m.initializers.at("W").ints.pop_back();
  EXPECT_TRUE(has_rule(validate(m), "data-size", "W"));
}

TEST(Validate, ThresholdRowsMustBeSorted) {
  GraphBuilder g;
  auto x = g.input("x", {2}, DataType::int_type(8));
  g.codes("T", {2, 2}, DataType::int_type(8), {0, 3, 4, 1});
  g.output(g.node(OpType::kMultiThreshold, "mt", {x, "T"}, {{"out_dtype", std::string("UINT2")}}));
  EXPECT_TRUE(has_rule(validate(g.build()), "thresholds-sorted", "mt"));
}

TEST(Validate, BatchNormEpsilonAndVariance) {
  GraphBuilder g;
  auto x = g.input("x", {2}, DataType::float32());
  g.reals("g", {2}, {1, 1});
  g.reals("b", {2}, {0, 0});
  g.reals("m", {2}, {0, 0});
  g.reals("v", {2}, {1, -1});
  g.output(g.node(OpType::kBatchNorm, "bn", {x, "g", "b", "m", "v"}, {{"epsilon", 0.0}}));
  const auto d = validate(g.build());
  EXPECT_TRUE(has_rule(d, "epsilon>0", "bn"));
  EXPECT_TRUE(has_rule(d, "variance≥0", "bn"));
}

TEST(Validate, ReuseFactorMustBePositive) {
  Model m = dense_4_3(false);
  m.nodes[0].attrs["reuse_factor"] = std::int64_t{0};
  EXPECT_TRUE(has_rule(validate(m), "reuse_factor≥1", "fc"));
}

TEST(TopologicalOrder, StableByDeclaration) {
  GraphBuilder g;
  auto x = g.input("x", {2}, DataType::int_type(8));
  // Declared out of order: "late" consumes "early".
  g.node(OpType::kReLU, "late", {"early_out"});
  g.node(OpType::kReLU, "early", {x});
  g.node(OpType::kReLU, "side", {x});
  g.output("late_out");
  g.output("side_out");
  const Model m = g.build();
  const auto order = topological_order(m);
  EXPECT_EQ(order, (std::vector<std::size_t>{1, 0, 2}));
  for (int i = 0; i < 5; ++i) EXPECT_EQ(topological_order(m), order);
}

TEST(InferTensorInfo, ConvPoolFlattenShapes) {
  GraphBuilder g;
  auto x = g.input("x", {3, 32, 32}, DataType::uint_type(8));
  g.codes("W", {4, 3, 3, 3}, DataType::bipolar(), std::vector<std::int64_t>(108, 1));
  auto c = g.node(OpType::kConv2D, "conv", {x, "W"}, {{"kernel", std::int64_t{3}}});
  auto p = g.node(OpType::kMaxPool2D, "pool", {c}, {{"kernel", std::int64_t{2}}});
  g.output(g.node(OpType::kFlatten, "flat", {p}));
  const auto info = infer_tensor_info(g.build());
  EXPECT_EQ(info.at("conv_out").shape, (Shape{4, 30, 30}));
  EXPECT_EQ(info.at("pool_out").shape, (Shape{4, 15, 15}));
  EXPECT_EQ(info.at("flat_out").shape, (Shape{900}));
  EXPECT_TRUE(info.at("conv_out").dtype.is_integer_backed());
}

TEST(InferTensorInfo, AccumulatorAttributeSetsOutputWidth) {
  Model m = dense_4_3(false);
  m.nodes[0].attrs["acc_dtype"] = std::string("INT10");
  EXPECT_EQ(infer_tensor_info(m).at("fc_out").dtype, DataType::int_type(10));
}

TEST(CountParams, BatchNormReportedSeparately) {
  GraphBuilder g;
  auto x = g.input("x", {4}, DataType::float32());
  g.reals("W", {3, 4}, std::vector<double>(12, 0.5));
  auto y = g.node(OpType::kDense, "fc", {x, "W"});
  for (const char* p : {"g", "b", "m", "v"}) g.reals(p, {3}, {1, 1, 1});
  g.output(g.node(OpType::kBatchNorm, "bn", {y, "g", "b", "m", "v"}, {{"epsilon", 1e-3}}));
  const Model m = g.build();
  EXPECT_EQ(count_params(m), 12);
  EXPECT_EQ(count_bn_params(m), 12);
}

TEST(Initializers, UnusedAreRemoved) {
  Model m = dense_4_3(false);
  m.initializers["orphan"] = Tensor::from_reals({1}, {0.0});
  EXPECT_EQ(unused_initializers(m), std::vector<std::string>{"orphan"});
  remove_unused_initializers(m);
  EXPECT_EQ(m.initializers.count("orphan"), 0u);
}

}  // namespace
}  // namespace qflow
