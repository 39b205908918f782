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

#include <random>

#include "qflow/datatype.hpp"
#include "qflow/errors.hpp"

namespace qflow {
namespace {

TEST(Rational, ParsesFractionsIntegersAndDecimals) {
  EXPECT_EQ(parse_rational("3/8"), Rational(3, 8));
  EXPECT_EQ(parse_rational("-2"), Rational(-2));
  EXPECT_EQ(parse_rational("0.375"), Rational(3, 8));
  EXPECT_EQ(parse_rational("-1.25"), Rational(-5, 4));
  EXPECT_THROW(parse_rational("abc"), SchemaError);
  EXPECT_THROW(parse_rational("1/0"), SchemaError);
  EXPECT_EQ(format_rational(Rational(6, 16)), "3/8");
  EXPECT_EQ(format_rational(Rational(4)), "4");
}

TEST(Rational, PowersOfTwoAreExact) {
  EXPECT_EQ(pow2(0), Rational(1));
  EXPECT_EQ(pow2(-3), Rational(1, 8));
  EXPECT_EQ(pow2(10), Rational(1024));
  EXPECT_THROW(pow2(63), DomainError);
}

TEST(DataType, ParsesAndPrintsEveryKind) {
  for (const char* text : {"FLOAT32", "INT8", "UINT3", "BIPOLAR", "FIXED<8,2>", "INT1", "UINT1"}) {
    EXPECT_EQ(DataType::parse(text).to_string(), text);
  }
  EXPECT_FALSE(DataType::try_parse("INT"));
  EXPECT_FALSE(DataType::try_parse("FIXED<8>"));
  EXPECT_THROW(DataType::parse("INT8X"), SchemaError);
}

TEST(DataType, CodeRanges) {
  EXPECT_EQ(DataType::int_type(8).min_code(), -128);
  EXPECT_EQ(DataType::int_type(8).max_code(), 127);
  EXPECT_EQ(DataType::uint_type(3).max_code(), 7);
  EXPECT_EQ(DataType::uint_type(1).min_code(), 0);
  EXPECT_EQ(DataType::uint_type(1).max_code(), 1);
  EXPECT_EQ(DataType::bipolar().min(), Rational(-1));
  EXPECT_EQ(DataType::bipolar().max(), Rational(1));
  EXPECT_TRUE(DataType::bipolar().contains_code(-1));
  EXPECT_FALSE(DataType::bipolar().contains_code(0));
}

TEST(DataType, FixedPointValuesAreScaledCodes) {
  const DataType f = DataType::fixed(8, 2);
  EXPECT_EQ(f.frac_bits(), 6);
  EXPECT_EQ(f.min(), Rational(-2));
  EXPECT_EQ(f.max(), Rational(127, 64));
  EXPECT_DOUBLE_EQ(f.code_to_real(-128), -2.0);
  EXPECT_DOUBLE_EQ(f.code_to_real(1), 1.0 / 64);
}

TEST(DataType, ValidityBounds) {
  EXPECT_TRUE(DataType::int_type(32).valid());
  EXPECT_FALSE(DataType::int_type(33).valid());
  EXPECT_FALSE(DataType::int_type(0).valid());
  EXPECT_FALSE(DataType::fixed(8, 9).valid());
  EXPECT_TRUE(DataType::fixed(8, 0).valid());
}

TEST(DataType, AccumulatorPicksIntOrFixed) {
  EXPECT_EQ(DataType::accumulator(16, 0), DataType::int_type(16));
  EXPECT_EQ(DataType::accumulator(16, 6), DataType::fixed(16, 10));
}

TEST(DataType, SignedBitsForRange) {
  EXPECT_EQ(signed_bits_for_range(0, 2), 3);
  EXPECT_EQ(signed_bits_for_range(-224, 224), 9);
  EXPECT_EQ(signed_bits_for_range(-128, 127), 8);
  EXPECT_EQ(signed_bits_for_range(-128, 128), 9);
  EXPECT_EQ(signed_bits_for_range(0, 0), 1);
  EXPECT_EQ(signed_bits_for_range(-1, 0), 1);
}

// min()/max() bracket every code the type admits.
TEST(DataType, BoundsBracketAcceptedCodes) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int bits = std::uniform_int_distribution<int>(1, 12)(rng);
    const int kind = std::uniform_int_distribution<int>(0, 2)(rng);
    const DataType dt = kind == 0   ? DataType::int_type(bits)
                        : kind == 1 ? DataType::uint_type(bits)
                                    : DataType::fixed(bits, std::uniform_int_distribution<int>(0, bits)(rng));
    for (std::int64_t c = dt.min_code() - 2; c <= dt.max_code() + 2; ++c) {
      const bool inside = dt.contains_code(c);
      EXPECT_EQ(inside, c >= dt.min_code() && c <= dt.max_code());
      if (inside) {
        EXPECT_LE(dt.min(), Rational(c) * pow2(dt.scale_exponent()));
        EXPECT_GE(dt.max(), Rational(c) * pow2(dt.scale_exponent()));
      }
    }
  }
}

}  // namespace
}  // namespace qflow
