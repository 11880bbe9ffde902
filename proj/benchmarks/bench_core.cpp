#include <benchmark/benchmark.h>

#include "malt/attack.hpp"
#include "malt/linalg.hpp"
#include "malt/rng.hpp"
#include "malt/sae.hpp"

namespace {

malt::TransferVectors randomVectors(std::size_t m, std::size_t d, std::uint64_t seed) {
    malt::Rng rng(seed);
    malt::TransferVectors out;
    out.a.resize(m);
    for (auto& v : out.a) {
        v.resize(d);
        for (double& x : v) x = rng.gaussian();
    }
    return out;
}

malt::LinearModel randomModel(std::size_t m, std::size_t d, std::uint64_t seed) {
    malt::Rng rng(seed);
    malt::Matrix W(m, d);
    for (double& x : W.data) x = rng.gaussian();
    return malt::LinearModel(std::move(W));
}

void BM_SaeGreedy(benchmark::State& state) {
    auto vectors = randomVectors(state.range(0), 32, 7);
    for (auto _ : state) benchmark::DoNotOptimize(malt::saeGreedy(vectors));
}
BENCHMARK(BM_SaeGreedy)->Arg(8)->Arg(16)->Arg(64);

void BM_SaeBruteforce(benchmark::State& state) {
    auto vectors = randomVectors(state.range(0), 32, 7);
    for (auto _ : state) benchmark::DoNotOptimize(malt::saeBruteforce(vectors));
}
BENCHMARK(BM_SaeBruteforce)->Arg(8)->Arg(12)->Arg(16);

void BM_MinNormFlip(benchmark::State& state) {
    const std::size_t m = state.range(0);
    auto model = randomModel(m, 24, 11);
    malt::Rng rng(13);
    malt::Vector x(24), y(m);
    for (double& v : x) v = rng.gaussian();
    for (double& v : y) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
    std::vector<std::size_t> targets{0, 1};
    for (auto _ : state)
        benchmark::DoNotOptimize(malt::minNormFlip(model, x, y, targets));
}
BENCHMARK(BM_MinNormFlip)->Arg(4)->Arg(8)->Arg(12);

void BM_ExactAttackability(benchmark::State& state) {
    const std::size_t m = state.range(0);
    auto model = randomModel(m, 24, 17);
    malt::Rng rng(19);
    malt::Vector x(24), y(m);
    for (double& v : x) v = rng.gaussian();
    for (double& v : y) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
    malt::BudgetSpec budget;
    budget.epsilon = 0.5;
    for (auto _ : state)
        benchmark::DoNotOptimize(malt::exactAttackability(model, x, y, budget));
}
BENCHMARK(BM_ExactAttackability)->Arg(6)->Arg(8)->Arg(10);

void BM_Svd(benchmark::State& state) {
    malt::Rng rng(23);
    const std::size_t n = state.range(0);
    malt::Matrix A(n, n);
    for (double& x : A.data) x = rng.gaussian();
    for (auto _ : state) benchmark::DoNotOptimize(malt::svd(A));
}
BENCHMARK(BM_Svd)->Arg(8)->Arg(16)->Arg(32);

} // namespace

BENCHMARK_MAIN();
