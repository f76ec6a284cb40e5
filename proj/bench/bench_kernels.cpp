// Serial reference kernels against the OpenMP versions.
// OMP_NUM_THREADS controls the parallel side.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "weightflow/kernels.hpp"

using namespace weightflow;

namespace {

struct FpCase {
    Grid2D grid;
    std::vector<double> p;
    std::vector<Vec2> drift, sigma2;
    std::vector<double> out;

    explicit FpCase(int n) : grid(-2, 2, -2, 2, n, n), p(grid.size()), drift(grid.size()), sigma2(grid.size()), out(grid.size()) {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t c = 0; c < grid.size(); ++c) {
            p[c] = u(rng);
            drift[c] = Vec2{u(rng) - 0.5, u(rng) - 0.5};
            sigma2[c] = Vec2{0.01 * u(rng), 0.01 * u(rng)};
        }
    }
};

template <bool Serial>
void BM_fp_step(benchmark::State& st) {
    FpCase c(static_cast<int>(st.range(0)));
    for (auto _ : st) {
        if constexpr (Serial)
            kernels::serial::fp_step(c.grid, c.p, c.drift, c.sigma2, 1e-4, c.out);
        else
            kernels::fp_step(c.grid, c.p, c.drift, c.sigma2, 1e-4, c.out);
        benchmark::DoNotOptimize(c.out.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<long>(c.grid.size()));
}

template <bool Serial>
void BM_kpz_rhs(benchmark::State& st) {
    FpCase c(static_cast<int>(st.range(0)));
    for (auto _ : st) {
        if constexpr (Serial)
            kernels::serial::kpz_rhs(c.grid, c.p, c.drift, c.sigma2, c.out);
        else
            kernels::kpz_rhs(c.grid, c.p, c.drift, c.sigma2, c.out);
        benchmark::DoNotOptimize(c.out.data());
    }
}

std::vector<Vec2> random_points(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<Vec2> v(n);
    for (auto& x : v) x = Vec2{z(rng), z(rng)};
    return v;
}

template <bool Serial>
void BM_kde_sum(benchmark::State& st) {
    const Grid2D g(-4, 4, -4, 4, 64, 64);
    const auto pts = random_points(static_cast<std::size_t>(st.range(0)), 2);
    std::vector<double> out(g.size());
    for (auto _ : st) {
        if constexpr (Serial)
            kernels::serial::kde_sum(pts, {}, g, 0.3, 0.3, out);
        else
            kernels::kde_sum(pts, {}, g, 0.3, 0.3, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Serial>
void BM_nadaraya_watson(benchmark::State& st) {
    const Grid2D g(-4, 4, -4, 4, 64, 64);
    const auto pts = random_points(static_cast<std::size_t>(st.range(0)), 3);
    const auto upd = random_points(pts.size(), 4);
    std::vector<Vec2> num(g.size());
    std::vector<double> den(g.size());
    for (auto _ : st) {
        if constexpr (Serial)
            kernels::serial::nadaraya_watson(pts, upd, g, 0.3, num, den);
        else
            kernels::nadaraya_watson(pts, upd, g, 0.3, num, den);
        benchmark::DoNotOptimize(den.data());
    }
}

template <bool Serial>
void BM_gemm_nn(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    Matrix a(n, 784), b(784, 256), c(n, 256);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& x : a.data) x = u(rng);
    for (double& x : b.data) x = u(rng);
    for (auto _ : st) {
        if constexpr (Serial)
            kernels::serial::gemm_nn(a, b, c);
        else
            kernels::gemm_nn(a, b, c);
        benchmark::DoNotOptimize(c.data.data());
    }
}

}  // namespace

BENCHMARK(BM_fp_step<true>)->Name("fp_step/serial")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_fp_step<false>)->Name("fp_step/omp")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_kpz_rhs<true>)->Name("kpz_rhs/serial")->Arg(64)->Arg(128);
BENCHMARK(BM_kpz_rhs<false>)->Name("kpz_rhs/omp")->Arg(64)->Arg(128);
BENCHMARK(BM_kde_sum<true>)->Name("kde_sum/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_kde_sum<false>)->Name("kde_sum/omp")->Arg(256)->Arg(1024);
BENCHMARK(BM_nadaraya_watson<true>)->Name("nadaraya_watson/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_nadaraya_watson<false>)->Name("nadaraya_watson/omp")->Arg(256)->Arg(1024);
BENCHMARK(BM_gemm_nn<true>)->Name("gemm_nn/serial")->Arg(64);
BENCHMARK(BM_gemm_nn<false>)->Name("gemm_nn/omp")->Arg(64);

BENCHMARK_MAIN();
