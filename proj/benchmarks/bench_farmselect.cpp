#include <farmselect/factor.hpp>
#include <farmselect/pipeline.hpp>
#include <farmselect/simulate.hpp>
#include <farmselect/solver.hpp>

#include <benchmark/benchmark.h>

using namespace farmselect;

namespace {

SimulatedData calibrated(Index n, Index p)
{
    return gen_calibrated_linear(n, p, CalibratedParams::sp500(), 10, 42);
}

// Eigendecomposition of the n x n Gram matrix plus the eigenvalue-ratio rule.
void BM_FactorEstimation(benchmark::State& state)
{
    const SimulatedData d = calibrated(state.range(0), state.range(1));
    const Index k_max = default_k_max(d.X.rows(), d.X.cols());
    for (auto _ : state) benchmark::DoNotOptimize(estimate_factors_auto(d.X, k_max));
}
BENCHMARK(BM_FactorEstimation)->Args({100, 500})->Args({250, 500})->Args({800, 500})->Unit(benchmark::kMillisecond);

// Warm-started 100-point path on the augmented design.
void BM_LinearPath(benchmark::State& state)
{
    const SimulatedData d = calibrated(state.range(0), state.range(1));
    const FactorDecomposition dec = estimate_factors(d.X, 3);
    const DenseMatrix W = augmented_design(dec);
    const PenaltyMask mask = PenaltyMask::farm_select(d.X.cols(), 3);
    const std::vector<double> lambdas = lambda_path_grid(W, d.y, GlmFamily::linear(), mask);
    for (auto _ : state) benchmark::DoNotOptimize(fit_path(W, d.y, GlmFamily::linear(), mask, lambdas));
}
BENCHMARK(BM_LinearPath)->Args({100, 500})->Args({250, 1000})->Unit(benchmark::kMillisecond);

void BM_LogisticPath(benchmark::State& state)
{
    const SimulatedData d = gen_logistic_design(LogisticDesign::Factor3, state.range(0), state.range(1), 42);
    const FactorDecomposition dec = estimate_factors(d.X, 3);
    const DenseMatrix W = augmented_design(dec);
    const PenaltyMask mask = PenaltyMask::farm_select(d.X.cols(), 3);
    const std::vector<double> lambdas = lambda_path_grid(W, d.y, GlmFamily::logistic(), mask);
    for (auto _ : state) benchmark::DoNotOptimize(fit_path(W, d.y, GlmFamily::logistic(), mask, lambdas));
}
BENCHMARK(BM_LogisticPath)->Args({200, 300})->Unit(benchmark::kMillisecond);

// 10-fold cross-validation over the default grid.
void BM_CrossValidation(benchmark::State& state)
{
    const SimulatedData d = calibrated(state.range(0), state.range(1));
    const FactorDecomposition dec = estimate_factors(d.X, 3);
    const DenseMatrix W = augmented_design(dec);
    const PenaltyMask mask = PenaltyMask::farm_select(d.X.cols(), 3);
    const std::vector<double> lambdas = lambda_path_grid(W, d.y, GlmFamily::linear(), mask);
    for (auto _ : state)
        benchmark::DoNotOptimize(cross_validate(W, d.y, GlmFamily::linear(), mask, lambdas, 10, 7));
}
BENCHMARK(BM_CrossValidation)->Args({100, 500})->Unit(benchmark::kMillisecond);

// Full pipeline: factors, path and cross-validated lambda.
void BM_FarmSelectEndToEnd(benchmark::State& state)
{
    const SimulatedData d = calibrated(state.range(0), state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(farm_select(d.X, d.y, GlmFamily::linear()));
}
BENCHMARK(BM_FarmSelectEndToEnd)->Args({100, 500})->Unit(benchmark::kMillisecond);

} // namespace

// libbenchmark_main.a ships with LTO bytecode from another compiler build.
BENCHMARK_MAIN();
