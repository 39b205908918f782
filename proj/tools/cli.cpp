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

#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qflow/cost.hpp"
#include "qflow/dataflow.hpp"
#include "qflow/passes.hpp"
#include "qflow/serialize.hpp"
#include "qflow/verify.hpp"
#include "qflow/zoo.hpp"

namespace qflow::cli {

namespace {

using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Model load_model(const std::string& path) { return parse_model(read_file(path)); }

void emit_json(std::ostream& out, const json& j) { out << j.dump(2) << "\n"; }

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::vector<std::string> split_passes(const std::string& text) {
  std::vector<std::string> names;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    if (!passes::is_pass_name(item)) {
      std::string known;
      for (const auto& n : passes::pass_names()) known += (known.empty() ? "" : ", ") + n;
      throw UsageError("unknown pass '" + item + "' (known: " + known + ")");
    }
    names.push_back(item);
  }
  return names;
}

std::optional<zoo::ZooId> zoo_id(std::string text) {
  for (auto& c : text) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return zoo::parse_zoo_id(text);
}

Flow flow_option(const std::string& text, Flow fallback) {
  if (text.empty()) return fallback;
  auto f = parse_flow(text);
  if (!f) throw UsageError("unknown mode '" + text + "' (expected hls4ml or finn)");
  return *f;
}

// --- inspect ---------------------------------------------------------------------

int cmd_inspect(const std::string& path, bool as_json, std::ostream& out, std::ostream& err) {
  Model m = parse_model_unchecked(read_file(path));
  if (auto diags = validate(m); !diags.empty()) throw ValidationError(std::move(diags));
  (void)err;
  const auto info = infer_tensor_info(m);
  if (as_json) {
    json j;
    j["name"] = m.name;
    j["flow"] = std::string(to_string(m.flow));
    j["inputs"] = json::array();
    for (const auto& in : m.inputs) {
      j["inputs"].push_back({{"name", in.name}, {"shape", in.shape}, {"dtype", in.dtype.to_string()}});
    }
    j["outputs"] = m.outputs;
    j["nodes"] = json::array();
    for (const auto& n : m.nodes) {
      const auto& t = info.at(n.outputs[0]);
      j["nodes"].push_back({{"name", n.name}, {"op", std::string(to_string(n.op))},
                            {"inputs", n.inputs}, {"output", n.outputs[0]},
                            {"shape", t.shape}, {"dtype", t.dtype.to_string()}});
    }
    j["node_count"] = m.nodes.size();
    j["params"] = count_params(m);
    emit_json(out, j);
    return kExitOk;
  }
  out << "model: " << m.name << " (" << to_string(m.flow) << ")\n";
  for (const auto& in : m.inputs) {
    out << "input: " << in.name << " " << shape_to_string(in.shape) << " " << in.dtype.to_string() << "\n";
  }
  for (const auto& o : m.outputs) out << "output: " << o << "\n";
  out << m.nodes.size() << " nodes\n";
  for (const auto& n : m.nodes) {
    const auto& t = info.at(n.outputs[0]);
    std::string ins;
    for (const auto& i : n.inputs) ins += (ins.empty() ? "" : ", ") + i;
    out << "  " << std::left << std::setw(16) << n.name << std::setw(16) << to_string(n.op)
        << std::setw(14) << shape_to_string(t.shape) << std::setw(12) << t.dtype.to_string()
        << ins << "\n";
  }
  out << "params: " << count_params(m) << "\n";
  return kExitOk;
}

// --- optimize --------------------------------------------------------------------

struct OptimizeArgs {
  std::string model;
  std::optional<std::string> passes;
  std::string output;
  int check = 0;
  std::uint64_t seed = 1;
  bool json = false;
};

Tolerance tolerance_for(const std::string& pass) {
  if (pass == "fold-bn") return Tolerance::kRelative;
  if (pass == "remove-softmax") return Tolerance::kArgmax;
  return Tolerance::kExact;
}

int cmd_optimize(const OptimizeArgs& a, std::ostream& out, std::ostream& err) {
  const auto names = a.passes ? split_passes(*a.passes) : passes::default_pipeline();
  const Model input = load_model(a.model);
  Model current = input;
  std::vector<passes::PassReport> reports;
  for (std::size_t i = 0; i < names.size(); ++i) {
    passes::PassResult step;
    try {
      step = passes::run_pass(current, names[i]);
    } catch (const Error& e) {
      throw PipelineError(i, names[i], e);
    }
    if (a.check > 0) {
      VerifyOptions vo;
      vo.samples = a.check;
      vo.seed = a.seed;
      // Exact comparison needs both sides on the integer path; fall back to
      // the relative class when a float graph is involved.
      vo.tolerance = tolerance_for(names[i]);
      auto r = verify_models(current, step.first, vo);
      if (vo.tolerance == Tolerance::kExact && (r.mode_a != ExecMode::kExactInt || r.mode_b != ExecMode::kExactInt)) {
        vo.tolerance = Tolerance::kRelative;
        r = verify_models(current, step.first, vo);
      }
      step.second.equivalence = r.passed() ? passes::EquivalenceStatus::kPassed
                                           : passes::EquivalenceStatus::kFailed;
    }
    current = std::move(step.first);
    reports.push_back(step.second);
  }
  require_valid(current);

  const std::string text = serialize_model(current);
  std::ostream& report_out = a.output.empty() ? err : out;
  if (a.output.empty()) out << text;
  else write_file(a.output, text);

  if (a.json) {
    json j;
    j["nodes_before"] = input.nodes.size();
    j["nodes_after"] = current.nodes.size();
    j["output"] = a.output;
    j["passes"] = json::array();
    for (const auto& r : reports) {
      j["passes"].push_back({{"pass", r.pass}, {"removed", r.removed}, {"added", r.added},
                             {"rewritten", r.rewritten},
                             {"equivalence", std::string(to_string(r.equivalence))}});
    }
    emit_json(report_out, j);
  } else {
    for (const auto& r : reports) {
      report_out << "pass " << r.pass << ": removed " << r.removed << ", added " << r.added
                 << ", rewritten " << r.rewritten << ", equivalence " << to_string(r.equivalence) << "\n";
    }
    report_out << "nodes: " << input.nodes.size() << " -> " << current.nodes.size() << "\n";
  }
  const bool failed = std::any_of(reports.begin(), reports.end(), [](const auto& r) {
    return r.equivalence == passes::EquivalenceStatus::kFailed;
  });
  return failed ? kExitMismatch : kExitOk;
}

// --- cost ------------------------------------------------------------------------

int cmd_cost(const std::string& path, const std::string& baseline, bool as_json, std::ostream& out) {
  const Model m = load_model(path);
  std::optional<Model> base;
  if (!baseline.empty()) base = load_model(baseline);
  const auto r = cost::model_cost(m, base ? &*base : nullptr);
  if (as_json) {
    json j;
    j["bops"] = r.bops;
    j["wm_bits"] = r.wm_bits;
    j["flops"] = r.flops;
    j["params"] = r.params;
    if (r.cost_c) j["cost_c"] = *r.cost_c;
    j["layers"] = json::array();
    for (const auto& l : r.layers) {
      j["layers"].push_back({{"node", l.node}, {"m", l.m}, {"n", l.n}, {"k", l.k}, {"b_a", l.b_a},
                             {"b_w", l.b_w}, {"out_positions", l.out_positions},
                             {"params", l.params}, {"bops", l.bops}, {"wm_bits", l.wm_bits}});
    }
    emit_json(out, j);
    return kExitOk;
  }
  out << "bops: " << number(r.bops) << "\n"
      << "wm_bits: " << r.wm_bits << "\n"
      << "flops: " << r.flops << "\n"
      << "params: " << r.params << "\n";
  if (r.cost_c) out << "cost_c: " << number(*r.cost_c) << "\n";
  for (const auto& l : r.layers) {
    out << "  " << std::left << std::setw(16) << l.node << "m=" << l.m << " n=" << l.n
        << " k=" << l.k << " b_a=" << l.b_a << " b_w=" << l.b_w << " positions=" << l.out_positions
        << " bops=" << number(l.bops) << "\n";
  }
  return kExitOk;
}

// --- simulate --------------------------------------------------------------------

struct SimulateArgs {
  std::string model;
  std::string mode;
  double clock_mhz = 100.0;
  std::string fifo = "auto";
  std::int64_t inferences = 2;
  bool bench = false;
  int samples = 5;
  std::int64_t bench_window = 100000;
  bool sequential_rf = false;
  std::string write_plan;
  bool json = false;
};

dataflow::FifoPlan read_plan(const std::string& path, Flow fallback) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw SchemaError(path, "plan file '" + path + "' is not valid JSON: " + e.what());
  }
  dataflow::FifoPlan plan;
  plan.mode = fallback;
  if (!j.is_object() || !j.contains("depths") || !j["depths"].is_object()) {
    throw SchemaError(path, "plan file needs a \"depths\" object");
  }
  if (j.contains("mode")) {
    auto f = parse_flow(j["mode"].get<std::string>());
    if (!f) throw SchemaError(path, "plan mode must be hls4ml or finn");
    plan.mode = *f;
  }
  for (const auto& [edge, depth] : j["depths"].items()) {
    if (!depth.is_number_integer()) throw SchemaError(edge, "depth of '" + edge + "' must be an integer");
    plan.depths[edge] = depth.get<std::int64_t>();
  }
  return plan;
}

json plan_json(const dataflow::FifoPlan& plan) {
  return {{"mode", std::string(to_string(plan.mode))}, {"depths", plan.depths}};
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.inferences < 1) throw UsageError("--inferences must be at least 1");
  if (!(a.clock_mhz > 0.0)) throw UsageError("--clock-mhz must be positive");
  Model m = load_model(a.model);
  const Flow mode = flow_option(a.mode, m.flow);
  if (a.sequential_rf) dataflow::assign_sequential_reuse(m);
  const auto p = dataflow::map_to_pipeline(m, mode);

  dataflow::FifoPlan plan;
  dataflow::SimResult sim;
  std::optional<std::int64_t> unbounded_cycles;
  if (a.fifo == "auto") {
    auto sized = dataflow::size_fifos(p, a.inferences, mode);
    plan = sized.plan;
    sim = sized.sized;
    unbounded_cycles = sized.unbounded.total_cycles;
  } else {
    plan = read_plan(a.fifo, mode);
    sim = dataflow::simulate(p, plan, a.inferences);
  }
  if (!a.write_plan.empty()) write_file(a.write_plan, plan_json(plan).dump(2) + "\n");

  const dataflow::ClockConfig clock{a.clock_mhz * 1e6};
  json j;
  j["model"] = m.name;
  j["mode"] = std::string(to_string(mode));
  j["clock_mhz"] = a.clock_mhz;
  j["inferences"] = a.inferences;
  j["stages"] = p.stage_count();
  j["total_cycles"] = sim.total_cycles;
  j["deadlock"] = sim.deadlock;
  j["blocked_stages"] = sim.blocked_stages;
  j["fifo_memory_bits"] = dataflow::fifo_memory_bits(plan, p);
  if (unbounded_cycles) j["unbounded_cycles"] = *unbounded_cycles;
  j["fifos"] = json::array();
  for (const auto& e : p.edges) {
    j["fifos"].push_back({{"edge", e.name}, {"max_occupancy", sim.max_occupancy.at(e.name)},
                          {"depth", plan.depths.at(e.name)}, {"bits", plan.depths.at(e.name) * e.token_bits}});
  }
  if (!sim.deadlock) {
    const auto lat = dataflow::latency(sim, clock);
    j["cycles_per_inference"] = lat.cycles_per_inference;
    j["seconds"] = lat.seconds;
    j["initiation_interval_cycles"] = lat.initiation_interval_cycles;
    if (a.bench) {
      j["bench_samples"] = a.samples;
      j["bench_median_seconds"] = dataflow::bench_median(p, plan, clock, a.samples, a.bench_window);
    }
  }

  if (a.json) {
    emit_json(out, j);
  } else {
    out << "model: " << m.name << " (" << to_string(mode) << ", " << number(a.clock_mhz) << " MHz)\n"
        << "stages: " << p.stage_count() << "\n";
    for (const auto& f : j["fifos"]) {
      out << "  " << std::left << std::setw(32) << f["edge"].get<std::string>()
          << " occupancy " << std::setw(6) << f["max_occupancy"].get<std::int64_t>()
          << " depth " << std::setw(6) << f["depth"].get<std::int64_t>()
          << " bits " << f["bits"].get<std::int64_t>() << "\n";
    }
    out << "total_cycles: " << sim.total_cycles << "\n"
        << "fifo_memory_bits: " << j["fifo_memory_bits"].get<std::int64_t>() << "\n";
    if (!sim.deadlock) {
      out << "cycles_per_inference: " << number(j["cycles_per_inference"].get<double>()) << "\n"
          << "seconds: " << number(j["seconds"].get<double>()) << "\n";
      if (a.bench) out << "bench_median_seconds: " << number(j["bench_median_seconds"].get<double>()) << "\n";
    }
  }
  if (sim.deadlock) {
    std::string blocked;
    for (const auto& s : sim.blocked_stages) blocked += (blocked.empty() ? "" : ", ") + s;
    err << "deadlock: no progress within " << sim.watchdog_cycles << " cycles; blocked stages: " << blocked << "\n";
    return kExitDeadlock;
  }
  return kExitOk;
}

// --- verify ----------------------------------------------------------------------

struct VerifyArgs {
  std::string a, b;
  int samples = 100;
  std::uint64_t seed = 1;
  std::string tolerance = "auto";
  double rel_tol = 1e-6;
  bool json = false;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  if (a.samples < 1) throw UsageError("--samples must be at least 1");
  VerifyOptions vo;
  vo.samples = a.samples;
  vo.seed = a.seed;
  vo.relative_tolerance = a.rel_tol;
  if (a.tolerance != "auto") {
    vo.tolerance = parse_tolerance(a.tolerance);
    if (!vo.tolerance) throw UsageError("unknown tolerance '" + a.tolerance + "'");
  }
  const Model ma = load_model(a.a), mb = load_model(a.b);
  const auto r = verify_models(ma, mb, vo);
  auto mode_name = [](ExecMode m) { return m == ExecMode::kExactInt ? "exact_int" : "float"; };
  json j;
  j["tolerance"] = std::string(to_string(r.tolerance));
  j["mode_a"] = mode_name(r.mode_a);
  j["mode_b"] = mode_name(r.mode_b);
  j["samples"] = r.samples;
  j["seed"] = a.seed;
  j["mismatches"] = r.mismatches;
  j["max_abs_deviation"] = r.max_abs_deviation;
  j["max_rel_deviation"] = r.max_rel_deviation;
  j["argmax_agreement"] = static_cast<double>(r.argmax_agreements) / r.samples;
  j["passed"] = r.passed();
  if (r.counterexample) {
    j["counterexample_index"] = r.counterexample_index;
    j["counterexample"] = json::parse(serialize_tensors(*r.counterexample));
  }
  if (a.json) {
    emit_json(out, j);
  } else {
    out << "tolerance: " << to_string(r.tolerance) << " (" << mode_name(r.mode_a) << " vs "
        << mode_name(r.mode_b) << ")\n"
        << "samples: " << r.samples << "\n"
        << "mismatches: " << r.mismatches << "\n"
        << "max_abs_deviation: " << number(r.max_abs_deviation) << "\n"
        << "max_rel_deviation: " << number(r.max_rel_deviation) << "\n"
        << "argmax_agreement: " << number(j["argmax_agreement"].get<double>()) << "\n"
        << "verdict: " << (r.passed() ? "equivalent" : "MISMATCH") << "\n";
  }
  if (!r.passed()) {
    err << "first counterexample (sample " << r.counterexample_index << "):\n"
        << serialize_tensors(*r.counterexample);
    return kExitMismatch;
  }
  return kExitOk;
}

// --- zoo -------------------------------------------------------------------------

struct ZooArgs {
  std::string id;
  std::string output;
  std::string width_scale = "1";
  std::uint64_t seed = zoo::kDefaultSeed;
  bool json = false;
};

int cmd_zoo(const ZooArgs& a, std::ostream& out, std::ostream& err) {
  auto id = zoo_id(a.id);
  if (!id) throw UsageError("unknown zoo model '" + a.id + "' (known: cnv-w1a1, kws-mlp, ad-ae, ic-cnn)");
  zoo::ZooSpec spec{*id};
  try {
    spec.width_scale = parse_rational(a.width_scale);
  } catch (const Error&) {
    throw UsageError("--width-scale must be a rational such as 1/8");
  }
  spec.seed = a.seed;
  const Model m = zoo::build(spec);
  const std::string text = serialize_model(m);
  std::ostream& report = a.output.empty() ? err : out;
  if (a.output.empty()) out << text;
  else write_file(a.output, text);
  if (a.json) {
    emit_json(report, {{"id", std::string(zoo::to_string(*id))}, {"params", count_params(m)},
                       {"output", a.output}});
  } else {
    report << "params: " << count_params(m) << "\n";
  }
  return kExitOk;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const PipelineError*>(&e)) return kExitTransform;
  switch (e.kind()) {
    case ErrorKind::kSchema:
    case ErrorKind::kValidation:
    case ErrorKind::kPlanIncomplete:
      return kExitInvalid;
    case ErrorKind::kDeadlockedResult:
      return kExitDeadlock;
    default:
      return kExitTransform;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"qflow: quantized network graph passes, cost metrics, and dataflow simulation", "qflow"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  std::string inspect_path;
  bool inspect_json = false;
  auto* inspect = app.add_subcommand("inspect", "Print the node table, shapes, dtypes and parameter count");
  inspect->add_option("model", inspect_path, "Model file")->required();
  inspect->add_flag("--json", inspect_json, "Structured output");

  OptimizeArgs opt;
  auto* optimize = app.add_subcommand("optimize", "Run graph passes and write the transformed model");
  optimize->add_option("model", opt.model, "Model file")->required();
  optimize->add_option("--passes", opt.passes,
                       "Comma-separated pass list (default: constant-fold,fold-bn,streamline,merge-relu,min-accum)");
  optimize->add_option("-o,--output", opt.output, "Output model file (default: standard output)");
  optimize->add_option("--check", opt.check, "Verify each pass on N random inputs")->check(CLI::NonNegativeNumber);
  optimize->add_option("--seed", opt.seed, "Seed for --check inputs");
  optimize->add_flag("--json", opt.json, "Structured report");

  std::string cost_path, cost_baseline;
  bool cost_json = false;
  auto* cost = app.add_subcommand("cost", "BOPs, weight memory, FLOPs and normalized inference cost");
  cost->add_option("model", cost_path, "Model file")->required();
  cost->add_option("--baseline", cost_baseline, "Reference model for cost_c");
  cost->add_flag("--json", cost_json, "Structured report");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Map to a dataflow pipeline, size FIFOs and simulate");
  simulate->add_option("model", sim.model, "Model file")->required();
  simulate->add_option("--mode", sim.mode, "hls4ml or finn (default: the model's flow)");
  simulate->add_option("--clock-mhz", sim.clock_mhz, "Clock frequency in MHz")->capture_default_str();
  simulate->add_option("--fifo", sim.fifo, "'auto' to size FIFOs, or a plan file")->capture_default_str();
  simulate->add_option("--inferences", sim.inferences, "Back-to-back inferences to simulate")->capture_default_str();
  simulate->add_flag("--bench", sim.bench, "Add the median latency over --samples batch-1 runs");
  simulate->add_option("--samples", sim.samples, "Bench samples")->capture_default_str();
  simulate->add_option("--bench-window", sim.bench_window, "Minimum simulated cycles per bench sample")
      ->capture_default_str();
  simulate->add_flag("--sequential-rf", sim.sequential_rf, "Use fully sequential reuse factors");
  simulate->add_option("--write-plan", sim.write_plan, "Write the FIFO plan used to this file");
  simulate->add_flag("--json", sim.json, "Structured report");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "Compare two models on seeded random inputs");
  verify->add_option("model_a", ver.a, "Reference model")->required();
  verify->add_option("model_b", ver.b, "Candidate model")->required();
  verify->add_option("-n,--samples", ver.samples, "Number of random inputs")->capture_default_str();
  verify->add_option("--seed", ver.seed, "Input seed")->capture_default_str();
  verify->add_option("--tolerance", ver.tolerance, "auto, exact, relative or argmax")->capture_default_str();
  verify->add_option("--rel-tol", ver.rel_tol, "Bound for the relative class")->capture_default_str();
  verify->add_flag("--json", ver.json, "Structured report");

  ZooArgs zo;
  auto* zoo_cmd = app.add_subcommand("zoo", "Emit a reference model (cnv-w1a1, kws-mlp, ad-ae, ic-cnn)");
  zoo_cmd->add_option("id", zo.id, "Model id")->required();
  zoo_cmd->add_option("-o,--output", zo.output, "Output file (default: standard output)");
  zoo_cmd->add_option("--width-scale", zo.width_scale, "Hidden width multiplier, e.g. 1/8")->capture_default_str();
  zoo_cmd->add_option("--seed", zo.seed, "Weight seed");
  zoo_cmd->add_flag("--json", zo.json, "Structured report");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run 'qflow --help' for the command list\n";
    return kExitUsage;
  }

  try {
    if (inspect->parsed()) return cmd_inspect(inspect_path, inspect_json, out, err);
    if (optimize->parsed()) return cmd_optimize(opt, out, err);
    if (cost->parsed()) return cmd_cost(cost_path, cost_baseline, cost_json, out);
    if (simulate->parsed()) return cmd_simulate(sim, out, err);
    if (verify->parsed()) return cmd_verify(ver, out, err);
    if (zoo_cmd->parsed()) return cmd_zoo(zo, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    for (const auto& d : e.diagnostics()) {
      err << "  " << d.subject << ": [" << d.rule << "] " << d.message << "\n";
    }
    return kExitInvalid;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitUsage;
}

}  // namespace qflow::cli
