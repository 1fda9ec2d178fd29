#include "mimic/config.hpp"
#include "mimic/diagnostics.hpp"
#include "mimic/ekc.hpp"
#include "mimic/likelihood.hpp"
#include "mimic/simulation.hpp"

#include <benchmark/benchmark.h>

namespace {

mimic::SimulatedData sample(std::size_t n, std::size_t k) {
    mimic::SimConfig c;
    c.spec = mimic::ModelSpec::make(5, k);
    c.true_params = mimic::default_true_parameters(5, k);
    c.n = n;
    c.seed = 42;
    return mimic::simulate(c);
}

void BM_Likelihood(benchmark::State& state) {
    const auto k = static_cast<std::size_t>(state.range(0));
    const auto sim = sample(81, k);
    const auto spec = mimic::ModelSpec::make(5, k);
    const auto cp = mimic::CrossProducts::from(sim.data);
    const auto params = mimic::default_true_parameters(5, k);
    for (auto _ : state) {
        auto v = mimic::evaluate_likelihood(cp, spec, params, mimic::Scale::unconstrained, true);
        benchmark::DoNotOptimize(v.loglik);
    }
}
BENCHMARK(BM_Likelihood)->Arg(6)->Arg(9);

void BM_FitNoSe(benchmark::State& state) {
    const auto sim = sample(81, 9);
    const auto spec = mimic::ModelSpec::make(5, 9);
    mimic::FitConfig cfg;
    cfg.se_methods.clear();
    for (auto _ : state) benchmark::DoNotOptimize(mimic::fit_ml(sim.data, spec, cfg).loglik);
}
BENCHMARK(BM_FitNoSe)->Unit(benchmark::kMicrosecond);

void BM_FitWithSe(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto sim = sample(n, 9);
    const auto spec = mimic::ModelSpec::make(5, 9);
    for (auto _ : state) benchmark::DoNotOptimize(mimic::fit_ml(sim.data, spec, {}).loglik);
}
BENCHMARK(BM_FitWithSe)->Arg(81)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_Mardia(benchmark::State& state) {
    const auto sim = sample(1000, 6);
    for (auto _ : state) benchmark::DoNotOptimize(mimic::mardia_test(sim.data.y).omnibus_pvalue);
}
BENCHMARK(BM_Mardia)->Unit(benchmark::kMicrosecond);

void BM_Loess(benchmark::State& state) {
    const auto sim = sample(static_cast<std::size_t>(state.range(0)), 6);
    const Eigen::VectorXd x = sim.data.x.col(0);
    const Eigen::VectorXd y = sim.latent;
    for (auto _ : state) benchmark::DoNotOptimize(mimic::loess_fit(x, y).fitted(0));
}
BENCHMARK(BM_Loess)->Arg(81)->Arg(500)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
