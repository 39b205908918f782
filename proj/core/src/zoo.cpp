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

#include "qflow/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "qflow/exec.hpp"

namespace qflow::zoo {

std::string_view to_string(ZooId id) {
  switch (id) {
    case ZooId::kCnvW1A1: return "CNV_W1A1";
    case ZooId::kKwsMlp: return "KWS_MLP";
    case ZooId::kAdAe: return "AD_AE";
    case ZooId::kIcCnn: return "IC_CNN";
  }
  return "?";
}

std::optional<ZooId> parse_zoo_id(std::string_view text) {
  for (auto id : all_ids())
    if (to_string(id) == text) return id;
  return std::nullopt;
}

const std::vector<ZooId>& all_ids() {
  static const std::vector<ZooId> kIds = {ZooId::kCnvW1A1, ZooId::kKwsMlp, ZooId::kAdAe,
                                          ZooId::kIcCnn};
  return kIds;
}

namespace {

// A tensor being built, with rough first and second moments of its real
// values. The moments only steer BatchNorm statistics and weight spread so
// that activations stay in an interesting range.
struct Edge {
  std::string name;
  Shape shape;
  DataType dtype;
  double mean = 0.0;
  double sq = 1.0;
};

struct Moments {
  double mean = 0.0;
  double sq = 0.0;
};

Moments moments_of(const std::vector<std::int64_t>& codes, DataType dt) {
  Moments m;
  for (auto c : codes) {
    const double v = dt.code_to_real(c);
    m.mean += v;
    m.sq += v * v;
  }
  const double n = static_cast<double>(std::max<std::size_t>(codes.size(), 1));
  return {m.mean / n, m.sq / n};
}

Moments uniform_domain_moments(DataType dt) {
  if (dt.kind() == DataType::Kind::kBipolar) return {0.0, 1.0};
  const double lo = static_cast<double>(dt.min_code());
  const double hi = static_cast<double>(dt.max_code());
  const double ulp = std::ldexp(1.0, dt.scale_exponent());
  const double mean = (lo + hi) / 2.0;
  const double var = ((hi - lo + 1) * (hi - lo + 1) - 1) / 12.0;
  return {mean * ulp, (var + mean * mean) * ulp * ulp};
}

class Builder {
 public:
  Builder(std::string name, Flow flow, std::uint64_t seed) : rng_(seed), probe_rng_(seed ^ 0xabcdefULL) {
    m_.name = std::move(name);
    m_.flow = flow;
  }

  Edge input(const std::string& name, Shape shape, DataType dt) {
    m_.inputs.push_back({name, shape, dt});
    auto mo = uniform_domain_moments(dt);
    return {name, shape, dt, mo.mean, mo.sq};
  }

  // Weight codes: uniform over the domain for narrow integer types, otherwise
  // a rounded normal sized to keep the layer output near unit variance.
  Moments weights(const std::string& name, Shape shape, DataType dt, double fan_in, double x_sq) {
    const auto count = static_cast<std::size_t>(element_count(shape));
    std::vector<std::int64_t> codes(count);
    if (dt.kind() == DataType::Kind::kBipolar) {
      std::bernoulli_distribution coin(0.5);
      for (auto& c : codes) c = coin(rng_) ? 1 : -1;
    } else if (dt.kind() == DataType::Kind::kInt) {
      std::uniform_int_distribution<std::int64_t> u(dt.min_code(), dt.max_code());
      for (auto& c : codes) c = u(rng_);
    } else {
      const double ulp = std::ldexp(1.0, dt.scale_exponent());
      const double sigma = std::max(1.0, 1.0 / std::sqrt(fan_in * std::max(x_sq, 1e-6)) / ulp);
      std::normal_distribution<double> nd(0.0, sigma);
      for (auto& c : codes) {
        c = std::clamp(static_cast<std::int64_t>(std::llround(nd(rng_))), dt.min_code(), dt.max_code());
      }
    }
    auto mo = moments_of(codes, dt);
    m_.initializers[name] = Tensor::from_codes(std::move(shape), dt, std::move(codes));
    return mo;
  }

  void bias(const std::string& name, std::int64_t m, DataType dt) {
    std::vector<std::int64_t> codes(static_cast<std::size_t>(m));
    const std::int64_t span = std::min<std::int64_t>(dt.max_code(), 1 << std::max(0, dt.frac_bits() - 1));
    std::uniform_int_distribution<std::int64_t> u(-span, span);
    for (auto& c : codes) c = u(rng_);
    m_.initializers[name] = Tensor::from_codes({m}, dt, std::move(codes));
  }

  Edge dense(const std::string& name, const Edge& x, std::int64_t m, DataType wdt,
             std::optional<DataType> bdt = std::nullopt) {
    const double n = static_cast<double>(x.shape[0]);
    auto w = weights(name + "_W", {m, x.shape[0]}, wdt, n, x.sq);
    Node node{OpType::kDense, name, {x.name, name + "_W"}, {name + "_out"}, {}};
    if (bdt) {
      bias(name + "_b", m, *bdt);
      node.inputs.push_back(name + "_b");
    }
    m_.nodes.push_back(node);
    return linear_edge(name + "_out", {m}, x, w, n);
  }

  Edge conv(const std::string& name, const Edge& x, std::int64_t m, std::int64_t k,
            std::int64_t stride, std::vector<std::int64_t> pads, DataType wdt,
            std::optional<DataType> bdt = std::nullopt) {
    const double n = static_cast<double>(x.shape[0] * k * k);
    auto w = weights(name + "_W", {m, x.shape[0], k, k}, wdt, n, x.sq);
    Node node{OpType::kConv2D, name, {x.name, name + "_W"}, {name + "_out"}, {}};
    node.attrs["kernel"] = k;
    if (stride != 1) node.attrs["stride"] = stride;
    if (std::any_of(pads.begin(), pads.end(), [](auto p) { return p != 0; })) node.attrs["pads"] = pads;
    if (bdt) {
      bias(name + "_b", m, *bdt);
      node.inputs.push_back(name + "_b");
    }
    m_.nodes.push_back(node);
    const std::int64_t ho = (x.shape[1] + pads[0] + pads[2] - k) / stride + 1;
    const std::int64_t wo = (x.shape[2] + pads[1] + pads[3] - k) / stride + 1;
    return linear_edge(name + "_out", {m, ho, wo}, x, w, n);
  }

  // Statistics roughly centred on the incoming accumulator distribution, with
  // the occasional negative gamma so both threshold directions get exercised.
  Edge batchnorm(const std::string& name, const Edge& x) {
    const std::int64_t c = x.shape[0];
    const double var = std::max(x.sq - x.mean * x.mean, 1e-3);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> gamma, beta, mean, variance;
    for (std::int64_t i = 0; i < c; ++i) {
      const double sign = u01(rng_) < 0.125 ? -1.0 : 1.0;
      gamma.push_back(sign * (0.5 + u01(rng_)));
      beta.push_back(u01(rng_) - 0.5);
      mean.push_back(x.mean + 0.1 * std::sqrt(var) * nd(rng_));
      variance.push_back(var * (0.7 + 0.6 * u01(rng_)));
    }
    const std::vector<std::pair<std::string, std::vector<double>>> params = {
        {"_gamma", gamma}, {"_beta", beta}, {"_mean", mean}, {"_var", variance}};
    Node node{OpType::kBatchNorm, name, {x.name}, {name + "_out"}, {{"epsilon", 1e-3}}};
    for (const auto& [suffix, values] : params) {
      m_.initializers[name + suffix] = Tensor::from_reals({c}, values);
      node.inputs.push_back(name + suffix);
    }
    m_.nodes.push_back(node);
    return {name + "_out", x.shape, DataType::float32(), 0.0, 1.0};
  }

  Edge relu(const std::string& name, const Edge& x) {
    m_.nodes.push_back({OpType::kReLU, name, {x.name}, {name + "_out"}, {}});
    return {name + "_out", x.shape, x.dtype, x.mean, x.sq};
  }

  Edge quant(const std::string& name, const Edge& x, const std::string& scale, DataType dt,
             bool after_relu) {
    Node node{OpType::kQuant, name, {x.name}, {name + "_out"}, {{"scale", scale}, {"dtype", dt.to_string()}}};
    m_.nodes.push_back(node);
    // Probe the quantizer on a unit normal to estimate output moments.
    auto q = QuantParams::from_node(node);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<std::int64_t> codes(512);
    for (auto& code : codes) {
      double v = nd(probe_rng_);
      code = q.quantize(after_relu ? std::max(v, 0.0) : v);
    }
    auto mo = moments_of(codes, dt);
    return {name + "_out", x.shape, dt, mo.mean, mo.sq};
  }

  Edge maxpool(const std::string& name, const Edge& x, std::int64_t k) {
    m_.nodes.push_back({OpType::kMaxPool2D, name, {x.name}, {name + "_out"}, {{"kernel", k}}});
    return {name + "_out", {x.shape[0], x.shape[1] / k, x.shape[2] / k}, x.dtype, x.mean, x.sq};
  }

  Edge flatten(const std::string& name, const Edge& x) {
    m_.nodes.push_back({OpType::kFlatten, name, {x.name}, {name + "_out"}, {}});
    return {name + "_out", {element_count(x.shape)}, x.dtype, x.mean, x.sq};
  }

  Model finish(const std::string& op_name, OpType op, const Edge& x, std::string notes) {
    m_.nodes.push_back({op, op_name, {x.name}, {op_name + "_out"}, {}});
    m_.outputs.push_back(op_name + "_out");
    m_.notes = std::move(notes);
    return std::move(m_);
  }

  Model finish_raw(const Edge& x, std::string notes) {
    m_.outputs.push_back(x.name);
    m_.notes = std::move(notes);
    return std::move(m_);
  }

 private:
  static Edge linear_edge(std::string name, Shape shape, const Edge& x, const Moments& w, double n) {
    const double mean = n * x.mean * w.mean;
    const double var = n * std::max(x.sq * w.sq - x.mean * x.mean * w.mean * w.mean, 1e-9);
    return {std::move(name), std::move(shape), DataType::int_type(32), mean, var + mean * mean};
  }

  Model m_;
  std::mt19937_64 rng_;
  std::mt19937_64 probe_rng_;
};

std::int64_t scaled(std::int64_t width, const Rational& scale, const std::string& layer) {
  const Rational r = Rational(width) * scale;
  const std::int64_t w = r.numerator() / r.denominator();
  if (w < 1) {
    throw UnsupportedScale(layer, "width_scale " + format_rational(scale) + " leaves layer '" +
                                      layer + "' with zero width");
  }
  return w;
}

Model build_cnv(const ZooSpec& s) {
  Builder b("CNV_W1A1", Flow::kFinn, s.seed);
  const auto bip = DataType::bipolar();
  Edge x = b.input("image", {3, 32, 32}, DataType::uint_type(8));
  const std::int64_t widths[] = {64, 64, 128, 128, 256, 256};
  for (int i = 0; i < 6; ++i) {
    const std::string id = std::to_string(i);
    x = b.conv("conv" + id, x, scaled(widths[i], s.width_scale, "conv" + id), 3, 1, {0, 0, 0, 0}, bip);
    x = b.batchnorm("bn_conv" + id, x);
    x = b.quant("act_conv" + id, x, "1", bip, false);
    if (i == 1 || i == 3) x = b.maxpool("pool" + std::to_string(i / 2), x, 2);
  }
  x = b.flatten("flatten", x);
  for (int i = 0; i < 2; ++i) {
    const std::string id = std::to_string(i);
    x = b.dense("fc" + id, x, scaled(512, s.width_scale, "fc" + id), bip);
    x = b.batchnorm("bn_fc" + id, x);
    x = b.quant("act_fc" + id, x, "1", bip, false);
  }
  x = b.dense("fc2", x, 10, bip);
  return b.finish("argmax", OpType::kArgMax, x,
                  "Binarized VGG-style CNN for 32x32 RGB images; 8-bit input, 1-bit weights and activations.");
}

Model build_kws(const ZooSpec& s) {
  Builder b("KWS_MLP", Flow::kFinn, s.seed);
  Edge x = b.input("mfcc", {490}, DataType::int_type(8));
  for (int i = 0; i < 3; ++i) {
    const std::string id = std::to_string(i);
    x = b.dense("fc" + id, x, scaled(256, s.width_scale, "fc" + id), DataType::int_type(3));
    x = b.batchnorm("bn" + id, x);
    x = b.relu("relu" + id, x);
    x = b.quant("act" + id, x, "3/8", DataType::uint_type(3), true);
  }
  x = b.dense("fc3", x, 12, DataType::int_type(3));
  return b.finish("argmax", OpType::kArgMax, x,
                  "Keyword-spotting MLP over 10x49 MFCC features with 3-bit weights and activations.");
}

Model build_ad(const ZooSpec& s) {
  if (s.ad_hidden_layers < 1) throw UnsupportedScale("AD_AE", "autoencoder needs at least one hidden layer");
  Builder b("AD_AE", Flow::kHls4ml, s.seed);
  const auto wdt = DataType::fixed(6, 1);
  const auto bdt = DataType::fixed(12, 4);
  const auto adt = DataType::fixed(8, 3);
  Edge x = b.input("features", {128}, DataType::fixed(12, 4));
  const std::int64_t width = scaled(s.ad_hidden_width, s.width_scale, "fc0");
  for (int i = 0; i < s.ad_hidden_layers; ++i) {
    const std::string id = std::to_string(i);
    x = b.dense("fc" + id, x, width, wdt, bdt);
    x = b.batchnorm("bn" + id, x);
    x = b.relu("relu" + id, x);
    x = b.quant("act" + id, x, "1/32", adt, true);
  }
  x = b.dense("fc" + std::to_string(s.ad_hidden_layers), x, 128, wdt, bdt);
  return b.finish_raw(x, "Fully connected autoencoder for anomaly detection on 128 spectrogram features.");
}

Model build_ic(const ZooSpec& s) {
  Builder b("IC_CNN", Flow::kHls4ml, s.seed);
  const auto fx = DataType::fixed(8, 2);
  Edge x = b.input("image", {3, 32, 32}, fx);
  const std::int64_t filters[] = {32, 4, 32, 32, 4};
  const std::int64_t kernels[] = {1, 4, 4, 4, 4};
  const std::int64_t strides[] = {1, 1, 1, 4, 1};
  for (int i = 0; i < 5; ++i) {
    const std::string id = std::to_string(i);
    const std::int64_t k = kernels[i];
    std::vector<std::int64_t> pads = {0, 0, 0, 0};
    if (strides[i] == 1 && k > 1) pads = {(k - 1) / 2, (k - 1) / 2, k / 2, k / 2};
    x = b.conv("conv" + id, x, scaled(filters[i], s.width_scale, "conv" + id), k, strides[i], pads, fx, fx);
    x = b.relu("relu" + id, x);
    x = b.quant("act" + id, x, "1/64", fx, true);
  }
  x = b.flatten("flatten", x);
  x = b.dense("fc", x, 10, fx, fx);
  return b.finish("softmax", OpType::kSoftmax, x,
                  "Two-stack CNN for 32x32 RGB image classification in FIXED<8,2>.");
}

}  // namespace

Model build(const ZooSpec& spec) {
  if (spec.width_scale <= 0) {
    throw UnsupportedScale(std::string(to_string(spec.id)), "width_scale must be positive");
  }
  switch (spec.id) {
    case ZooId::kCnvW1A1: return build_cnv(spec);
    case ZooId::kKwsMlp: return build_kws(spec);
    case ZooId::kAdAe: return build_ad(spec);
    case ZooId::kIcCnn: return build_ic(spec);
  }
  throw UnsupportedScale("zoo", "unknown model id");
}

}  // namespace qflow::zoo
