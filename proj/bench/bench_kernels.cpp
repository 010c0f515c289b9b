// Serial reference vs OpenMP kernels: the Fock-space matvec, the trajectory
// ensemble and the hierarchy in real vs complex arithmetic.

#include "qle/oracle.hpp"
#include "qle/stochastic.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace qle;

namespace {

struct MatvecFixture {
    FockBasis basis;
    SpinBosonHamiltonian h;
    std::vector<cplx> x, y;

    explicit MatvecFixture(int cutoff)
        : basis(64, cutoff),
          h(basis, discretize(ExponentialKernel(0.1, 0.2), 64, 10.0).modes, 1.0),
          x(h.dim()), y(h.dim())
    {
        std::mt19937_64 rng(1);
        std::normal_distribution<double> g;
        for (auto& v : x) v = cplx(g(rng), g(rng));
    }
};

void matvec(benchmark::State& state, bool parallel)
{
    static MatvecFixture f(3);
    for (auto _ : state) {
        if (parallel) f.h.apply(f.x, f.y);
        else f.h.apply_serial(f.x, f.y);
        benchmark::DoNotOptimize(f.y.data());
    }
    state.counters["nnz"] = static_cast<double>(f.h.nonzeros());
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.h.nonzeros()));
}

void ensemble(benchmark::State& state, bool parallel)
{
    SystemSpec sys;
    EnsembleOptions o;
    o.n_traj = static_cast<std::size_t>(state.range(0));
    o.t_max = 10.0;
    o.parallel = parallel;
    for (auto _ : state) benchmark::DoNotOptimize(ensemble_mean(sys, o));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void hierarchy(benchmark::State& state, bool complex_path)
{
    SystemSpec sys;
    PropagateOptions o;
    o.order = static_cast<int>(state.range(0));
    o.t_max = 10.0;
    o.complex_arithmetic = complex_path;
    for (auto _ : state) benchmark::DoNotOptimize(propagate(sys, o));
}

} // namespace

BENCHMARK_CAPTURE(matvec, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(matvec, parallel, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(ensemble, serial, false)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(ensemble, parallel, true)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(hierarchy, real, false)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(hierarchy, complex, true)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
