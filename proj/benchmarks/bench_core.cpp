// SPDX-License-Identifier: Apache-2.0

#include "xlmimo/assbl.hpp"
#include "xlmimo/bench.hpp"

#include <benchmark/benchmark.h>

using namespace xlmimo;

namespace {

void bm_steering(benchmark::State& state) {
    const auto geom = ArrayGeometry::make(static_cast<int>(state.range(0)), 100e9);
    for (auto _ : state) benchmark::DoNotOptimize(steering_vector(geom, 0.3, 25.0));
}
BENCHMARK(bm_steering)->Arg(64)->Arg(256);

void bm_e_step(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    const int m = k / 4;
    Rng rng(1);
    std::normal_distribution<double> gauss;
    CMat psi(m, k);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < m; ++i) psi(i, j) = Complex(gauss(rng), gauss(rng));
    CVec y(m);
    for (int i = 0; i < m; ++i) y[i] = Complex(gauss(rng), gauss(rng));
    const Vec omega = Vec::Random(k).array().abs() + 0.1;
    for (auto _ : state) benchmark::DoNotOptimize(e_step(psi, y, 1.0, omega, 4));
}
BENCHMARK(bm_e_step)->Arg(128)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void bm_assbl_desk_trial(benchmark::State& state) {
    SweepConfig cfg = SweepConfig::desk_profile();
    for (auto _ : state) benchmark::DoNotOptimize(run_trial(cfg, 0, 15.0, 16));
}
BENCHMARK(bm_assbl_desk_trial)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
