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

#include "qflow/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace qflow {

using nlohmann::json;

namespace {

[[noreturn]] void schema_fail(const std::string& where, const std::string& msg) {
  throw SchemaError(where, where + ": " + msg);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(where, std::string("missing key '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) schema_fail(where, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

Shape parse_shape(const json& j, const std::string& where) {
  if (!j.is_array()) schema_fail(where, "shape must be an array");
  Shape s;
  for (const auto& d : j) {
    if (!d.is_number_integer()) schema_fail(where, "shape entries must be integers");
    s.push_back(d.get<std::int64_t>());
  }
  return s;
}

DataType parse_dtype(const json& j, const std::string& where) {
  if (!j.is_string()) schema_fail(where, "dtype must be a string");
  auto dt = DataType::try_parse(j.get<std::string>());
  if (!dt) schema_fail(where, "unknown dtype '" + j.get<std::string>() + "'");
  return *dt;
}

Tensor parse_tensor(const json& j, const std::string& where) {
  if (!j.is_object()) schema_fail(where, "tensor must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k != "shape" && k != "dtype" && k != "data") schema_fail(where, "unknown key '" + k + "'");
  }
  Tensor t;
  t.shape = parse_shape(require(j, "shape", where), where);
  t.dtype = parse_dtype(require(j, "dtype", where), where);
  const json& data = require(j, "data", where);
  if (!data.is_array()) schema_fail(where, "data must be an array");
  if (t.dtype.is_float()) {
    t.reals.reserve(data.size());
    for (const auto& v : data) {
      if (!v.is_number()) schema_fail(where, "FLOAT32 data must be numbers");
      t.reals.push_back(v.get<double>());
    }
  } else {
    t.ints.reserve(data.size());
    for (const auto& v : data) {
      if (!v.is_number_integer()) {
        schema_fail(where, "data for " + t.dtype.to_string() + " must be literal integers");
      }
      t.ints.push_back(v.get<std::int64_t>());
    }
  }
  return t;
}

json tensor_to_json(const Tensor& t) {
  json j;
  j["shape"] = t.shape;
  j["dtype"] = t.dtype.to_string();
  if (t.dtype.is_float()) {
    j["data"] = t.reals;
  } else {
    j["data"] = t.ints;
  }
  return j;
}

AttrValue parse_attr(const json& v, const std::string& where) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::vector<std::int64_t> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) schema_fail(where, "list attributes must hold integers");
      out.push_back(e.get<std::int64_t>());
    }
    return out;
  }
  schema_fail(where, "unsupported attribute value");
}

json attr_to_json(const AttrValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

// Pretty printer: containers are indented, arrays of scalars stay on one line.
void emit(const json& j, std::ostringstream& os, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(depth + 1) * 2, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    std::size_t i = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++i) {
      os << inner << json(it.key()).dump() << ": ";
      emit(it.value(), os, depth + 1);
      os << (i + 1 < j.size() ? ",\n" : "\n");
    }
    os << pad << "}";
  } else if (j.is_array()) {
    bool scalars = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
    if (scalars) {
      os << j.dump();
      return;
    }
    os << "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      os << inner;
      emit(j[i], os, depth + 1);
      os << (i + 1 < j.size() ? ",\n" : "\n");
    }
    os << pad << "]";
  } else {
    os << j.dump();
  }
}

std::string pretty(const json& j) {
  std::ostringstream os;
  emit(j, os, 0);
  os << "\n";
  return os.str();
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("document", std::string("document: malformed text: ") + e.what());
  }
}

}  // namespace

Model parse_model_unchecked(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) schema_fail("document", "top level must be an object");
  static const std::set<std::string> kKeys = {"name", "flow", "notes", "inputs",
                                              "outputs", "initializers", "nodes"};
  for (const auto& [k, v] : doc.items()) {
    if (!kKeys.count(k)) schema_fail("document", "unknown top-level key '" + k + "'");
  }
  Model m;
  m.name = require_string(doc, "name", "document");
  auto flow = parse_flow(require_string(doc, "flow", "document"));
  if (!flow) schema_fail("document", "flow must be \"hls4ml\" or \"finn\"");
  m.flow = *flow;
  if (doc.contains("notes")) {
    if (!doc["notes"].is_string()) schema_fail("document", "notes must be a string");
    m.notes = doc["notes"].get<std::string>();
  }

  const json& inputs = require(doc, "inputs", "document");
  if (!inputs.is_array()) schema_fail("inputs", "must be an array");
  for (const auto& in : inputs) {
    std::string name = require_string(in, "name", "inputs");
    m.inputs.push_back({name, parse_shape(require(in, "shape", name), name),
                        parse_dtype(require(in, "dtype", name), name)});
  }

  const json& outputs = require(doc, "outputs", "document");
  if (!outputs.is_array()) schema_fail("outputs", "must be an array");
  for (const auto& o : outputs) {
    if (!o.is_string()) schema_fail("outputs", "entries must be tensor names");
    m.outputs.push_back(o.get<std::string>());
  }

  const json& inits = require(doc, "initializers", "document");
  if (!inits.is_object()) schema_fail("initializers", "must be an object");
  for (const auto& [name, t] : inits.items()) m.initializers.emplace(name, parse_tensor(t, name));

  const json& nodes = require(doc, "nodes", "document");
  if (!nodes.is_array()) schema_fail("nodes", "must be an array");
  for (const auto& jn : nodes) {
    if (!jn.is_object()) schema_fail("nodes", "entries must be objects");
    Node n;
    n.name = require_string(jn, "name", "nodes");
    for (const auto& [k, v] : jn.items()) {
      if (k != "op" && k != "name" && k != "inputs" && k != "outputs" && k != "attrs") {
        schema_fail(n.name, "unknown key '" + k + "'");
      }
    }
    std::string op = require_string(jn, "op", n.name);
    auto parsed = parse_op(op);
    if (!parsed) schema_fail(n.name, "unknown op '" + op + "'");
    n.op = *parsed;
    for (const char* key : {"inputs", "outputs"}) {
      const json& list = require(jn, key, n.name);
      if (!list.is_array()) schema_fail(n.name, std::string(key) + " must be an array");
      for (const auto& e : list) {
        if (!e.is_string()) schema_fail(n.name, std::string(key) + " must hold tensor names");
        (std::string(key) == "inputs" ? n.inputs : n.outputs).push_back(e.get<std::string>());
      }
    }
    if (jn.contains("attrs")) {
      if (!jn["attrs"].is_object()) schema_fail(n.name, "attrs must be an object");
      for (const auto& [k, v] : jn["attrs"].items()) n.attrs.emplace(k, parse_attr(v, n.name));
    }
    m.nodes.push_back(std::move(n));
  }
  return m;
}

Model parse_model(std::string_view text) {
  Model m = parse_model_unchecked(text);
  require_valid(m);
  return m;
}

std::string serialize_model(const Model& m) {
  json doc;
  doc["name"] = m.name;
  doc["flow"] = std::string(to_string(m.flow));
  if (!m.notes.empty()) doc["notes"] = m.notes;
  doc["inputs"] = json::array();
  for (const auto& in : m.inputs) {
    doc["inputs"].push_back({{"name", in.name}, {"shape", in.shape}, {"dtype", in.dtype.to_string()}});
  }
  doc["outputs"] = m.outputs;
  doc["initializers"] = json::object();
  for (const auto& [name, t] : m.initializers) doc["initializers"][name] = tensor_to_json(t);
  doc["nodes"] = json::array();
  for (const auto& n : m.nodes) {
    json jn;
    jn["op"] = std::string(to_string(n.op));
    jn["name"] = n.name;
    jn["inputs"] = n.inputs;
    jn["outputs"] = n.outputs;
    if (!n.attrs.empty()) {
      json attrs = json::object();
      for (const auto& [k, v] : n.attrs) attrs[k] = attr_to_json(v);
      jn["attrs"] = attrs;
    }
    doc["nodes"].push_back(std::move(jn));
  }
  return pretty(doc);
}

std::map<std::string, Tensor> parse_tensors(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) schema_fail("tensors", "top level must be an object of tensors");
  std::map<std::string, Tensor> out;
  for (const auto& [name, t] : doc.items()) out.emplace(name, parse_tensor(t, name));
  return out;
}

std::string serialize_tensors(const std::map<std::string, Tensor>& tensors) {
  json doc = json::object();
  for (const auto& [name, t] : tensors) doc[name] = tensor_to_json(t);
  return pretty(doc);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError(path, "cannot write '" + path + "'");
  out << contents;
}

}  // namespace qflow
