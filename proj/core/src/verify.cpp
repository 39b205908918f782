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

#include "qflow/verify.hpp"

#include <algorithm>
#include <cmath>

namespace qflow {

std::string_view to_string(Tolerance t) {
  switch (t) {
    case Tolerance::kExact: return "exact";
    case Tolerance::kRelative: return "relative";
    case Tolerance::kArgmax: return "argmax";
  }
  return "?";
}

std::optional<Tolerance> parse_tolerance(std::string_view text) {
  for (auto t : {Tolerance::kExact, Tolerance::kRelative, Tolerance::kArgmax})
    if (to_string(t) == text) return t;
  return std::nullopt;
}

ExecValue random_inputs(const Model& m, std::mt19937_64& rng) {
  ExecValue in;
  for (const auto& d : m.inputs) {
    const auto n = static_cast<std::size_t>(element_count(d.shape));
    if (d.dtype.is_float()) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      std::vector<double> v(n);
      for (auto& x : v) x = u(rng);
      in[d.name] = Tensor::from_reals(d.shape, std::move(v));
      continue;
    }
    std::vector<std::int64_t> codes(n);
    if (d.dtype.kind() == DataType::Kind::kBipolar) {
      std::bernoulli_distribution coin(0.5);
      for (auto& c : codes) c = coin(rng) ? 1 : -1;
    } else {
      std::uniform_int_distribution<std::int64_t> u(d.dtype.min_code(), d.dtype.max_code());
      for (auto& c : codes) c = u(rng);
    }
    in[d.name] = Tensor::from_codes(d.shape, d.dtype, std::move(codes));
  }
  return in;
}

namespace {

std::vector<Tensor> outputs_of(const Model& m, const ExecValue& v) {
  std::vector<Tensor> out;
  for (const auto& name : m.outputs) out.push_back(v.at(name));
  return out;
}

// Runs in exact mode when the model allows it; remembers the choice.
std::vector<Tensor> run_best(const Model& m, const ExecValue& in, std::optional<ExecMode>& mode) {
  if (!mode) {
    try {
      auto out = run(m, in, ExecMode::kExactInt);
      mode = ExecMode::kExactInt;
      return outputs_of(m, out);
    } catch (const DtypeError&) {
      mode = ExecMode::kFloat;
    }
  }
  return outputs_of(m, run(m, in, *mode));
}

std::size_t predicted(const Tensor& t) {
  auto v = t.to_reals();
  if (v.size() == 1) return static_cast<std::size_t>(v[0]);
  return argmax(v);
}

}  // namespace

VerifyResult verify_models(const Model& a, const Model& b, const VerifyOptions& options) {
  if (a.inputs.size() != b.inputs.size() || a.outputs.size() != b.outputs.size()) {
    throw SchemaError("", "models have different numbers of inputs or outputs");
  }
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    const auto& x = a.inputs[i];
    const auto& y = b.inputs[i];
    if (x.name != y.name || x.shape != y.shape || x.dtype != y.dtype) {
      throw SchemaError(x.name, "input '" + x.name + "' differs between the models");
    }
  }

  VerifyResult r;
  std::optional<ExecMode> ma, mb;
  std::mt19937_64 rng(options.seed);
  for (int s = 0; s < options.samples; ++s) {
    const ExecValue in = random_inputs(a, rng);
    const auto oa = run_best(a, in, ma);
    const auto ob = run_best(b, in, mb);
    if (s == 0) {
      r.mode_a = *ma;
      r.mode_b = *mb;
      if (options.tolerance) {
        r.tolerance = *options.tolerance;
      } else {
        bool shapes_match = true;
        for (std::size_t i = 0; i < oa.size(); ++i) shapes_match &= oa[i].shape == ob[i].shape;
        if (!shapes_match) r.tolerance = Tolerance::kArgmax;
        else if (*ma == ExecMode::kExactInt && *mb == ExecMode::kExactInt) r.tolerance = Tolerance::kExact;
        else r.tolerance = Tolerance::kRelative;
      }
    }

    bool ok = true;
    for (std::size_t i = 0; i < oa.size(); ++i) {
      const bool same_shape = oa[i].shape == ob[i].shape;
      if (same_shape) {
        const auto va = oa[i].to_reals(), vb = ob[i].to_reals();
        double dev = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < va.size(); ++k) {
          dev = std::max(dev, std::abs(va[k] - vb[k]));
          scale = std::max({scale, std::abs(va[k]), std::abs(vb[k])});
        }
        const double rel = scale > 0.0 ? dev / scale : 0.0;
        r.max_abs_deviation = std::max(r.max_abs_deviation, dev);
        r.max_rel_deviation = std::max(r.max_rel_deviation, rel);
        if (r.tolerance == Tolerance::kExact) ok &= va == vb;
        if (r.tolerance == Tolerance::kRelative) ok &= rel <= options.relative_tolerance;
      } else if (r.tolerance != Tolerance::kArgmax) {
        ok = false;
      }
      const bool agree = oa[i].size() > 0 && ob[i].size() > 0 && predicted(oa[i]) == predicted(ob[i]);
      if (r.tolerance == Tolerance::kArgmax) ok &= agree;
      if (i == 0 && agree) ++r.argmax_agreements;
    }
    ++r.samples;
    if (!ok) {
      ++r.mismatches;
      if (!r.counterexample) {
        r.counterexample = in;
        r.counterexample_index = s;
      }
    }
  }
  return r;
}

}  // namespace qflow
