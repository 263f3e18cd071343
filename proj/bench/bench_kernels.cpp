// Serial reference against OpenMP kernels. Arguments: grid size n.

#include <benchmark/benchmark.h>

#include <random>

#include "sparselab/operators.hpp"
#include "sparselab/verify.hpp"

namespace {

struct Setup {
    sl::DiscreteSpace s;
    sl::DyadicLattice lat;
    sl::SparseFamily S;
    sl::Functions f;
    sl::Functions b;

    explicit Setup(int n) : s(sl::DiscreteSpace::grid_uniform(n)), lat(sl::build_standard_lattice(s)) {
        std::mt19937_64 rng(n);
        S = sl::random_sparse_family(lat, rng, 0.3, 0.5);
        f = {sl::random_function(rng, n), sl::random_function(rng, n)};
        std::normal_distribution<double> g;
        b.assign(2, sl::Vec(n));
        for (auto& v : b)
            for (double& x : v) x = g(rng);
    }
    Setup(const Setup&) = delete;
};

sl::Exec exec_of(const benchmark::State& st) { return st.range(1) ? sl::Exec::parallel : sl::Exec::serial; }

void BM_sparse_basic(benchmark::State& st) {
    Setup u(static_cast<int>(st.range(0)));
    const auto cfg = sl::ExponentConfig::make({2.0, 2.0}, 1.0);
    for (auto _ : st) benchmark::DoNotOptimize(sl::sparse_basic(u.S, u.f, cfg, exec_of(st)));
    st.counters["cubes"] = static_cast<double>(u.S.cubes.size());
}

void BM_sparse_higher(benchmark::State& st) {
    Setup u(static_cast<int>(st.range(0)));
    const auto cfg = sl::ExponentConfig::make({2.0, 2.0}, 1.0);
    const sl::MultiIndexPair pr{{2, 1}, {1, 0}, {0}, {0, 1}};
    for (auto _ : st) benchmark::DoNotOptimize(sl::sparse_higher(u.S, u.b, u.f, pr, cfg, exec_of(st)));
}

void BM_frac_integral(benchmark::State& st) {
    Setup u(static_cast<int>(st.range(0)));
    const sl::FracKernel K(u.s, 1, 0.5);
    for (auto _ : st) benchmark::DoNotOptimize(sl::frac_integral(K, {u.f[0]}, exec_of(st)));
}

void BM_frac_integral_bilinear(benchmark::State& st) {
    Setup u(static_cast<int>(st.range(0)));
    const sl::FracKernel K(u.s, 2, 1.0);
    for (auto _ : st) benchmark::DoNotOptimize(sl::frac_integral(K, u.f, exec_of(st)));
}

void BM_commutator(benchmark::State& st) {
    Setup u(static_cast<int>(st.range(0)));
    const sl::FracKernel K(u.s, 2, 1.0);
    const sl::MultiIndexPair pr{{1, 1}, {0, 0}, {}, {0, 1}};
    for (auto _ : st) benchmark::DoNotOptimize(sl::commutator_general(K, u.b, u.f, pr, exec_of(st)));
}

}  // namespace

BENCHMARK(BM_sparse_basic)->ArgsProduct({{64, 256, 1024, 4096}, {0, 1}});
BENCHMARK(BM_sparse_higher)->ArgsProduct({{64, 256, 1024}, {0, 1}});
BENCHMARK(BM_frac_integral)->ArgsProduct({{64, 256, 1024}, {0, 1}});
BENCHMARK(BM_frac_integral_bilinear)->ArgsProduct({{32, 64, 128}, {0, 1}});
BENCHMARK(BM_commutator)->ArgsProduct({{32, 64}, {0, 1}});

BENCHMARK_MAIN();
