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

#ifndef QFLOW_DATATYPE_HPP_
#define QFLOW_DATATYPE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <boost/rational.hpp>

namespace qflow {

using Rational = boost::rational<std::int64_t>;

// Parses "3/8", "-2", or an exact decimal such as "0.375".
Rational parse_rational(std::string_view text);
std::string format_rational(const Rational& r);
double to_double(const Rational& r);
// 2^exp as an exact rational; |exp| <= 62.
Rational pow2(int exp);

// Value domain of a tensor.
//
// Integer-backed kinds (INT, BIPOLAR, FIXED) are stored as integer codes.
// The real value of a code is `code * 2^scale_exponent()`; the exponent is
// zero except for FIXED, where it is `int_bits - bits`.
class DataType {
 public:
  enum class Kind { kFloat32, kInt, kBipolar, kFixed };

  constexpr DataType() = default;

  static constexpr DataType float32() { return DataType(Kind::kFloat32, 32, 0, true); }
  static constexpr DataType bipolar() { return DataType(Kind::kBipolar, 1, 0, true); }
  static constexpr DataType int_type(int bits, bool is_signed = true) {
    return DataType(Kind::kInt, bits, bits, is_signed);
  }
  static constexpr DataType uint_type(int bits) { return int_type(bits, false); }
  static constexpr DataType fixed(int bits, int int_bits) {
    return DataType(Kind::kFixed, bits, int_bits, true);
  }
  // A signed accumulator type of `bits` bits whose codes are scaled by
  // 2^-frac_bits. INT when frac_bits == 0, FIXED otherwise. The resulting
  // FIXED may have negative int_bits, which only inferred edge types use.
  static constexpr DataType accumulator(int bits, int frac_bits) {
    return frac_bits == 0 ? int_type(bits) : fixed(bits, bits - frac_bits);
  }

  // "FLOAT32", "INT8", "UINT3", "BIPOLAR", "FIXED<8,2>".
  static DataType parse(std::string_view text);
  static std::optional<DataType> try_parse(std::string_view text);
  std::string to_string() const;

  constexpr Kind kind() const { return kind_; }
  constexpr int bits() const { return bits_; }
  constexpr int int_bits() const { return int_bits_; }
  constexpr bool is_signed() const { return signed_; }
  constexpr bool is_float() const { return kind_ == Kind::kFloat32; }
  constexpr bool is_integer_backed() const { return kind_ != Kind::kFloat32; }
  constexpr int frac_bits() const { return kind_ == Kind::kFixed ? bits_ - int_bits_ : 0; }
  constexpr int scale_exponent() const { return -frac_bits(); }

  // Declared-type invariants: bit widths 1..32, 0 <= int_bits <= bits.
  bool valid() const;

  // Inclusive code range. Undefined for FLOAT32.
  std::int64_t min_code() const;
  std::int64_t max_code() const;
  bool contains_code(std::int64_t code) const;

  // Exact real-valued bounds. FLOAT32 reports the float range rounded to an
  // integer magnitude of 2^62.
  Rational min() const;
  Rational max() const;

  double code_to_real(std::int64_t code) const;

  bool operator==(const DataType&) const = default;

 private:
  constexpr DataType(Kind kind, int bits, int int_bits, bool is_signed)
      : kind_(kind), bits_(bits), int_bits_(int_bits), signed_(is_signed) {}

  Kind kind_ = Kind::kFloat32;
  int bits_ = 32;
  int int_bits_ = 0;
  bool signed_ = true;
};

// Smallest signed bit width whose two's-complement range covers [lo, hi].
int signed_bits_for_range(std::int64_t lo, std::int64_t hi);

}  // namespace qflow

#endif  // QFLOW_DATATYPE_HPP_
