// Serial reference vs OpenMP kernel for the shared-draw union count.

#include <benchmark/benchmark.h>

#include "bfreg/mc_kernels.hpp"

namespace {

using bfreg::Matrix;
using bfreg::Vector;

struct Problem {
    bfreg::MultivariateT dist;
    std::vector<bfreg::kernels::LinearRegion> regions;
};

Problem make_problem(Eigen::Index d)
{
    Matrix S = Matrix::Constant(d, d, 0.3);
    S.diagonal().setOnes();
    Problem p{{Vector::Zero(d), S, 3.0}, {}};
    // Order chain x1 > x2 > ... > xd and the positive orthant.
    Matrix chain = Matrix::Zero(d - 1, d);
    for (Eigen::Index i = 0; i + 1 < d; ++i) {
        chain(i, i) = 1.0;
        chain(i, i + 1) = -1.0;
    }
    p.regions.push_back({chain, Vector::Zero(d - 1)});
    p.regions.push_back({Matrix::Identity(d, d), Vector::Zero(d)});
    return p;
}

void BM_UnionSerial(benchmark::State& state)
{
    const auto p = make_problem(state.range(1));
    for (auto _ : state)
        benchmark::DoNotOptimize(bfreg::kernels::count_in_union_serial(p.dist, p.regions, state.range(0), 7));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_UnionParallel(benchmark::State& state)
{
    const auto p = make_problem(state.range(1));
    for (auto _ : state)
        benchmark::DoNotOptimize(bfreg::kernels::count_in_union_parallel(p.dist, p.regions, state.range(0), 7));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ConstraintProb(benchmark::State& state)
{
    const auto p = make_problem(state.range(1));
    const auto exec = state.range(2) ? bfreg::Execution::parallel : bfreg::Execution::serial;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            bfreg::mvt_constraint_prob(p.dist, p.regions[1].R, p.regions[1].r, state.range(0), 7, exec));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK(BM_UnionSerial)->Args({1 << 20, 3})->Args({1 << 20, 6})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_UnionParallel)->Args({1 << 20, 3})->Args({1 << 20, 6})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConstraintProb)->Args({1 << 20, 3, 0})->Args({1 << 20, 3, 1})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
