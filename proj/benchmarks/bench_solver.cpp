#include <benchmark/benchmark.h>

#include "cbound/optimizer.hpp"
#include "cbound/rng.hpp"
#include "cbound/synth.hpp"

namespace {

cbound::JointDistribution fixed_joint(std::size_t n, std::size_t m) {
    cbound::Rng rng(2718);
    const std::vector<double> flat =
        rng.dirichlet(std::vector<double>(n * m, 1.0));
    std::vector<std::vector<double>> cells(m, std::vector<double>(n));
    for (std::size_t y = 0; y < m; ++y)
        for (std::size_t x = 0; x < n; ++x) cells[y][x] = flat[y * n + x];
    return cbound::JointDistribution::validate(std::move(cells));
}

void BM_Counterfactual(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto m = static_cast<std::size_t>(state.range(1));
    const cbound::JointDistribution j = fixed_joint(n, m);
    cbound::SolverConfig cfg;
    cfg.theta = 0.4;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cbound::bounds_counterfactual(j, {0, 0}, cfg));
    }
}

void BM_Canonical(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto m = static_cast<std::size_t>(state.range(1));
    const cbound::JointDistribution j = fixed_joint(n, m);
    cbound::SolverConfig cfg;
    cfg.theta = 0.4;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cbound::bounds_canonical(j, {0, 0}, cfg));
    }
}

void BM_GridOracle2x2(benchmark::State& state) {
    const cbound::JointDistribution j = fixed_joint(2, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cbound::grid_oracle(j, {0, 0}, 0.3, 1e-3));
    }
}

void BM_SampleFull(benchmark::State& state) {
    cbound::SamplerConfig cfg;
    cfg.n = static_cast<std::size_t>(state.range(0));
    cbound::Rng rng(7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cbound::sample_full(cfg, rng));
    }
}

}  // namespace

BENCHMARK(BM_Counterfactual)
    ->Args({2, 2})
    ->Args({2, 4})
    ->Args({2, 8})
    ->Args({4, 2})
    ->Args({8, 2});
BENCHMARK(BM_Canonical)
    ->Args({2, 2})
    ->Args({2, 4})
    ->Args({2, 8})
    ->Args({4, 2})
    ->Args({8, 2});
BENCHMARK(BM_GridOracle2x2);
BENCHMARK(BM_SampleFull)->Arg(2)->Arg(10);

BENCHMARK_MAIN();
