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

#include "qflow/datatype.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "qflow/errors.hpp"

namespace qflow {

namespace {

std::optional<std::int64_t> parse_int(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  return value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  auto fail = [&]() -> Rational {
    throw SchemaError(std::string(text), "not a rational literal: '" + std::string(text) + "'");
  };
  if (text.empty()) return fail();
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto num = parse_int(text.substr(0, slash));
    auto den = parse_int(text.substr(slash + 1));
    if (!num || !den || *den == 0) return fail();
    return Rational(*num, *den);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    bool negative = !whole.empty() && whole.front() == '-';
    if (negative) whole.remove_prefix(1);
    if (frac.size() > 17 || frac.empty()) return fail();
    auto w = whole.empty() ? std::optional<std::int64_t>(0) : parse_int(whole);
    auto f = parse_int(frac);
    if (!w || !f || *f < 0 || (!whole.empty() && whole.front() == '-')) return fail();
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    Rational r(*w * den + *f, den);
    return negative ? -r : r;
  }
  auto v = parse_int(text);
  if (!v) return fail();
  return Rational(*v);
}

std::string format_rational(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

Rational pow2(int exp) {
  if (exp > 62 || exp < -62) throw DomainError("pow2", "exponent out of range");
  std::int64_t p = std::int64_t{1} << (exp < 0 ? -exp : exp);
  return exp < 0 ? Rational(1, p) : Rational(p);
}

std::optional<DataType> DataType::try_parse(std::string_view text) {
  if (text == "FLOAT32") return float32();
  if (text == "BIPOLAR") return bipolar();
  if (text.starts_with("UINT")) {
    auto b = parse_int(text.substr(4));
    if (!b) return std::nullopt;
    return uint_type(static_cast<int>(*b));
  }
  if (text.starts_with("INT")) {
    auto b = parse_int(text.substr(3));
    if (!b) return std::nullopt;
    return int_type(static_cast<int>(*b));
  }
  if (text.starts_with("FIXED<") && text.ends_with(">")) {
    std::string_view body = text.substr(6, text.size() - 7);
    auto comma = body.find(',');
    if (comma == std::string_view::npos) return std::nullopt;
    auto total = parse_int(body.substr(0, comma));
    auto ib = parse_int(body.substr(comma + 1));
    if (!total || !ib) return std::nullopt;
    return fixed(static_cast<int>(*total), static_cast<int>(*ib));
  }
  return std::nullopt;
}

DataType DataType::parse(std::string_view text) {
  auto dt = try_parse(text);
  if (!dt) throw SchemaError(std::string(text), "unknown datatype '" + std::string(text) + "'");
  return *dt;
}

std::string DataType::to_string() const {
  switch (kind_) {
    case Kind::kFloat32:
      return "FLOAT32";
    case Kind::kBipolar:
      return "BIPOLAR";
    case Kind::kInt:
      return (signed_ ? "INT" : "UINT") + std::to_string(bits_);
    case Kind::kFixed:
      return "FIXED<" + std::to_string(bits_) + "," + std::to_string(int_bits_) + ">";
  }
  return "?";
}

bool DataType::valid() const {
  switch (kind_) {
    case Kind::kFloat32:
      return bits_ == 32;
    case Kind::kBipolar:
      return bits_ == 1;
    case Kind::kInt:
      return bits_ >= 1 && bits_ <= 32;
    case Kind::kFixed:
      return bits_ >= 1 && bits_ <= 32 && int_bits_ >= 0 && int_bits_ <= bits_;
  }
  return false;
}

std::int64_t DataType::min_code() const {
  switch (kind_) {
    case Kind::kBipolar:
      return -1;
    case Kind::kInt:
    case Kind::kFixed:
      return signed_ ? -(std::int64_t{1} << (bits_ - 1)) : 0;
    case Kind::kFloat32:
      break;
  }
  return std::numeric_limits<std::int64_t>::min();
}

std::int64_t DataType::max_code() const {
  switch (kind_) {
    case Kind::kBipolar:
      return 1;
    case Kind::kInt:
    case Kind::kFixed:
      return signed_ ? (std::int64_t{1} << (bits_ - 1)) - 1 : (std::int64_t{1} << bits_) - 1;
    case Kind::kFloat32:
      break;
  }
  return std::numeric_limits<std::int64_t>::max();
}

bool DataType::contains_code(std::int64_t code) const {
  if (kind_ == Kind::kFloat32) return true;
  if (kind_ == Kind::kBipolar) return code == -1 || code == 1;
  return code >= min_code() && code <= max_code();
}

Rational DataType::min() const {
  if (kind_ == Kind::kFloat32) return Rational(-(std::int64_t{1} << 62));
  return Rational(min_code()) * pow2(scale_exponent());
}

Rational DataType::max() const {
  if (kind_ == Kind::kFloat32) return Rational(std::int64_t{1} << 62);
  return Rational(max_code()) * pow2(scale_exponent());
}

double DataType::code_to_real(std::int64_t code) const {
  return std::ldexp(static_cast<double>(code), scale_exponent());
}

int signed_bits_for_range(std::int64_t lo, std::int64_t hi) {
  for (int b = 1; b < 64; ++b) {
    std::int64_t mn = -(std::int64_t{1} << (b - 1));
    std::int64_t mx = (std::int64_t{1} << (b - 1)) - 1;
    if (lo >= mn && hi <= mx) return b;
  }
  return 64;
}

}  // namespace qflow
