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


#include <benchmark/benchmark.h>

#include <random>

#include "qflow/dataflow.hpp"
#include "qflow/exec.hpp"
#include "qflow/passes.hpp"
#include "qflow/verify.hpp"
#include "qflow/zoo.hpp"

namespace {

using namespace qflow;

Model optimized(zoo::ZooId id, Rational scale) {
  Model m = zoo::build(zoo::ZooSpec{id, scale});
  if (id == zoo::ZooId::kIcCnn) m = passes::remove_softmax(m).first;
  return passes::run_pipeline(m, passes::default_pipeline()).first;
}

void BM_ExactInference(benchmark::State& state) {
  const Model m = optimized(static_cast<zoo::ZooId>(state.range(0)), Rational(1, 4));
  std::mt19937_64 rng(1);
  const ExecValue in = random_inputs(m, rng);
  for (auto _ : state) benchmark::DoNotOptimize(run(m, in, ExecMode::kExactInt));
  state.SetLabel(m.name);
}
BENCHMARK(BM_ExactInference)
    ->Arg(static_cast<int>(zoo::ZooId::kCnvW1A1))
    ->Arg(static_cast<int>(zoo::ZooId::kKwsMlp))
    ->Arg(static_cast<int>(zoo::ZooId::kIcCnn))
    ->Unit(benchmark::kMicrosecond);

void BM_Streamline(benchmark::State& state) {
  const Model m = passes::fold_bn(zoo::build(zoo::ZooSpec{zoo::ZooId::kKwsMlp, Rational(1, 2)})).first;
  for (auto _ : state) benchmark::DoNotOptimize(passes::streamline(m));
}
BENCHMARK(BM_Streamline)->Unit(benchmark::kMillisecond);

void BM_SizeFifos(benchmark::State& state) {
  const Model m = optimized(zoo::ZooId::kCnvW1A1, Rational(1));
  const auto p = dataflow::map_to_pipeline(m, Flow::kFinn);
  for (auto _ : state) benchmark::DoNotOptimize(dataflow::size_fifos(p, state.range(0), Flow::kFinn));
}
BENCHMARK(BM_SizeFifos)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
