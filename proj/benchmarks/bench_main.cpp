#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

#include "shadowspec/example17.hpp"
#include "shadowspec/projector.hpp"
#include "shadowspec/shadowing.hpp"
#include "shadowspec/spectral.hpp"

namespace {

using namespace shadowspec;

// S D S^-1 with moduli split between [0.3, 0.9] and [1.1, 2].
DenseOperator hyperbolic(int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix s = Matrix::Identity(dim, dim);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] += 0.3 * Complex(g(rng), g(rng));
    Vector d(dim);
    for (int k = 0; k < dim; ++k) {
        const double r = k % 2 ? 1.1 + 0.9 * u(rng) : 0.3 + 0.6 * u(rng);
        d(k) = std::polar(r, 2.0 * std::numbers::pi * u(rng));
    }
    return DenseOperator(s * d.asDiagonal() * s.inverse());
}

void BM_ClassifyDense(benchmark::State& state) {
    const DenseOperator a = hyperbolic(static_cast<int>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(classify_dense(a));
}
BENCHMARK(BM_ClassifyDense)->Arg(2)->Arg(8)->Arg(32)->Arg(128);

void BM_RieszProjector(benchmark::State& state) {
    const DenseOperator a = hyperbolic(static_cast<int>(state.range(0)), 2);
    const ContourConfig cfg{1.0, static_cast<int>(state.range(1))};
    for (auto _ : state) benchmark::DoNotOptimize(riesz_projector(a, cfg));
}
BENCHMARK(BM_RieszProjector)->Args({2, 256})->Args({8, 256})->Args({8, 4096})->Args({32, 256})
    ->Unit(benchmark::kMillisecond);

void BM_LaurentTable(benchmark::State& state) {
    const DenseOperator a = hyperbolic(static_cast<int>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(laurent_table(a, 6, ContourConfig{1.0, 512}));
}
BENCHMARK(BM_LaurentTable)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_ConstructShadow(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    const DenseOperator a = hyperbolic(dim, 4);
    const DenseOperator b = riesz_projector(a, ContourConfig{1.0, 512});
    const auto orbit = generate_pseudo_orbit(a, Vector::Ones(dim), 1e-3,
                                             Window::symmetric(state.range(1)), 4);
    for (auto _ : state) benchmark::DoNotOptimize(construct_shadow(a, b, orbit));
}
BENCHMARK(BM_ConstructShadow)->Args({2, 30})->Args({6, 30})->Args({6, 200})
    ->Unit(benchmark::kMillisecond);

void BM_DenseOracle(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    const DenseOperator a = hyperbolic(dim, 5);
    const auto orbit = generate_pseudo_orbit(a, Vector::Ones(dim), 1e-3,
                                             Window::symmetric(state.range(1)), 5);
    for (auto _ : state) benchmark::DoNotOptimize(shadow_oracle_lsq(a, orbit));
}
BENCHMARK(BM_DenseOracle)->Args({2, 30})->Args({6, 30})->Unit(benchmark::kMillisecond);

void BM_ShiftOracle(benchmark::State& state) {
    const auto N = state.range(0);
    const ShiftOperator t = eisenberg_hedlund_forward();
    const std::int64_t M = 2 * N + 22;
    const auto orbit = generate_pseudo_orbit(t, SupportedVector::basis(0), 1e-3,
                                             Window::symmetric(N), 6, M);
    for (auto _ : state) benchmark::DoNotOptimize(shadow_oracle_lsq(t, orbit));
}
BENCHMARK(BM_ShiftOracle)->Arg(8)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_WindowProbe(benchmark::State& state) {
    const int N = static_cast<int>(state.range(0));
    const ShiftOperator t = eisenberg_hedlund_forward();
    for (auto _ : state)
        benchmark::DoNotOptimize(window_probe(t, WindowKind::script_b, N, 2 * N + 2));
}
BENCHMARK(BM_WindowProbe)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_TestSequenceGain(benchmark::State& state) {
    const ShiftOperator t = eisenberg_hedlund_forward();
    const SupportedVector c = truncated_eigenvector(t.adjoint(), 1.0, 20);
    for (auto _ : state) benchmark::DoNotOptimize(bgain_test_sequence(t, c, 1.01));
}
BENCHMARK(BM_TestSequenceGain)->Unit(benchmark::kMillisecond);

void BM_Example17(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(run_example17());
}
BENCHMARK(BM_Example17)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
