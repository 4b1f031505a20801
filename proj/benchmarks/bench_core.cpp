// Copyright 2026 The ergostein Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "ergostein/noise.hpp"
#include "ergostein/oracle1d.hpp"
#include "ergostein/schemes.hpp"
#include "ergostein/stein_check.hpp"

using namespace ergostein;

namespace {

void BM_Increment(benchmark::State& state) {
    const NoiseStream s{7, 3};
    std::uint64_t k = 0;
    for (auto _ : state) benchmark::DoNotOptimize(increment(s, k++, 1, 0.01));
}
BENCHMARK(BM_Increment);

void BM_Bridge(benchmark::State& state) {
    const NoiseStream s{7, 3};
    std::uint64_t k = 0;
    const int n_sub = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(bridge(s, k++, n_sub, 1, 0.01));
}
BENCHMARK(BM_Bridge)->Arg(16)->Arg(64);

void BM_Step(benchmark::State& state) {
    const auto p = gallery_problem("P2");
    SchemeSpec spec;
    spec.kind = static_cast<SchemeKind>(state.range(0));
    spec.tau = 0.01;
    Vec y = Vec::Constant(1, 0.3);
    const NoiseStream s{1, 0};
    std::uint64_t k = 0;
    for (auto _ : state) {
        y = step(p, spec, y, increment(s, k++, 1, spec.tau));
        benchmark::DoNotOptimize(y);
    }
    state.SetLabel(std::string(to_string(spec.kind)));
}
BENCHMARK(BM_Step)
    ->Arg(static_cast<int>(SchemeKind::EM))
    ->Arg(static_cast<int>(SchemeKind::TEM))
    ->Arg(static_cast<int>(SchemeKind::PEM))
    ->Arg(static_cast<int>(SchemeKind::BEM));

void BM_SteinSolve(benchmark::State& state) {
    const auto p = gallery_problem("P2");
    const auto phi = tanh_function();
    for (auto _ : state) {
        const auto d = stationary_density(p);
        benchmark::DoNotOptimize(stein_solution(p, d, phi));
    }
}
BENCHMARK(BM_SteinSolve)->Unit(benchmark::kMillisecond);

void BM_TableEval(benchmark::State& state) {
    const auto p = gallery_problem("P2");
    const auto d = stationary_density(p);
    const auto sol = stein_solution(p, d, tanh_function());
    const int order = static_cast<int>(state.range(0));
    double x = -3.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sol.eval(x, order));
        x = x > 3.0 ? -3.0 : x + 0.0137;
    }
}
BENCHMARK(BM_TableEval)->DenseRange(0, 4);

void BM_GeneratorApply(benchmark::State& state) {
    const auto p = gallery_problem("P2");
    const auto d = stationary_density(p);
    const auto f = stein_solution(p, d, tanh_function()).as_function();
    const Vec x = Vec::Constant(1, 0.8);
    for (auto _ : state) benchmark::DoNotOptimize(generator_apply(p, f, x));
}
BENCHMARK(BM_GeneratorApply);

}  // namespace

BENCHMARK_MAIN();
