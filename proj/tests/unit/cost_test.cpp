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

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "qflow/cost.hpp"
#include "qflow/passes.hpp"
#include "qflow/zoo.hpp"

namespace qflow {
namespace {

using testing::GraphBuilder;

TEST(Bops, DenseFiveTwelveByTwoFiftySix) { EXPECT_DOUBLE_EQ(cost::bops_layer(512, 256, 1, 1, 1, 1), 1441792.0); }

TEST(Bops, UnitLayer) { EXPECT_DOUBLE_EQ(cost::bops_layer(1, 1, 1, 1, 1, 1), 3.0); }

TEST(Bops, FirstCnvConv) {
  const double per = 64.0 * 3 * 9 * (8 * 1 + 8 + 1 + std::log2(27.0));
  EXPECT_NEAR(cost::bops_layer(64, 3, 3, 8, 1, 900), per * 900, 1e-6 * per * 900);
}

TEST(Bops, RejectsNonPositiveArguments) {
  EXPECT_THROW(cost::bops_layer(0, 1, 1, 1, 1, 1), DomainError);
  EXPECT_THROW(cost::bops_layer(1, 1, 1, 1, -1, 1), DomainError);
  EXPECT_THROW(cost::bops_layer(1, 1, 1, 1, 1, 0), DomainError);
}

TEST(Bops, StrictlyMonotoneInEveryArgument) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::int64_t> d(1, 64);
  for (int i = 0; i < 500; ++i) {
    std::int64_t a[6] = {d(rng), d(rng), d(rng) % 7 + 1, d(rng) % 16 + 1, d(rng) % 16 + 1, d(rng)};
    const double base = cost::bops_layer(a[0], a[1], a[2], a[3], a[4], a[5]);
    for (int k = 0; k < 5; ++k) {
      auto b = a;
      ++b[k];
      EXPECT_GT(cost::bops_layer(b[0], b[1], b[2], b[3], b[4], b[5]), base) << "argument " << k;
    }
  }
}

TEST(ModelCost, CnvAgainstItself) {
  const Model cnv = zoo::build(zoo::ZooId::kCnvW1A1);
  const auto r = cost::model_cost(cnv, &cnv);
  ASSERT_TRUE(r.cost_c.has_value());
  EXPECT_EQ(*r.cost_c, 1.0);
  EXPECT_EQ(r.wm_bits, 1542848);
  EXPECT_EQ(r.params, 1542848);
  EXPECT_FALSE(cost::model_cost(cnv).cost_c.has_value());
}

TEST(ModelCost, KwsWeightMemory) { EXPECT_EQ(cost::model_cost(zoo::build(zoo::ZooId::kKwsMlp)).wm_bits, 778752); }

TEST(ModelCost, CnvFirstLayerUsesEightBitActivations) {
  const auto r = cost::model_cost(zoo::build(zoo::ZooId::kCnvW1A1));
  ASSERT_FALSE(r.layers.empty());
  EXPECT_EQ(r.layers[0].b_a, 8);
  EXPECT_EQ(r.layers[0].b_w, 1);
  EXPECT_EQ(r.layers[0].out_positions, 900);
  EXPECT_EQ(r.layers[1].b_a, 1);
  double sum = 0.0;
  for (const auto& l : r.layers) sum += l.bops;
  EXPECT_DOUBLE_EQ(sum, r.bops);
}

TEST(ModelCost, DoublingWeightBitsDoublesWeightMemory) {
  auto layer = [](int bits) {
    GraphBuilder g;
    auto x = g.input("x", {4}, DataType::int_type(8));
    g.codes("W", {3, 4}, DataType::int_type(bits), std::vector<std::int64_t>(12, 1));
    g.codes("b", {3}, DataType::int_type(bits), {0, 1, -1});
    g.output(g.node(OpType::kDense, "fc", {x, "W", "b"}));
    return g.build();
  };
  for (int bits : {2, 3, 4, 8}) {
    EXPECT_EQ(cost::model_cost(layer(2 * bits)).wm_bits, 2 * cost::model_cost(layer(bits)).wm_bits);
  }
  EXPECT_EQ(cost::model_cost(layer(4)).wm_bits, 15 * 4);
}

TEST(ModelCost, SelfNormalizationIsExactlyOne) {
  for (auto id : {zoo::ZooId::kKwsMlp, zoo::ZooId::kAdAe, zoo::ZooId::kIcCnn}) {
    const Model m = zoo::build(id);
    EXPECT_EQ(*cost::model_cost(m, &m).cost_c, 1.0) << zoo::to_string(id);
  }
}

TEST(ModelCost, FloatWeightsAreMissingAnnotations) {
  std::mt19937_64 rng(2);
  EXPECT_THROW(cost::model_cost(testing::random_linear_bn(rng, false)), MissingAnnotation);
}

TEST(Flops, DenseWithoutBias) {
  GraphBuilder g;
  auto x = g.input("x", {4}, DataType::float32());
  g.reals("W", {3, 4}, std::vector<double>(12, 1.0));
  g.output(g.node(OpType::kDense, "fc", {x, "W"}));
  EXPECT_EQ(cost::flops(g.build()), 24);
}

TEST(Flops, EmptyGraph) { EXPECT_EQ(cost::flops(Model{}), 0); }

TEST(Flops, IcCnnNearPublishedFigure) {
  const auto f = static_cast<double>(cost::flops(zoo::build(zoo::ZooId::kIcCnn)));
  EXPECT_GE(f, 12.8e6 / 2);
  EXPECT_LE(f, 12.8e6 * 2);
}

}  // namespace
}  // namespace qflow
