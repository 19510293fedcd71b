#include <cmath>
#include <cstdint>

#include <benchmark/benchmark.h>

#include "ssem/analysis.hpp"
#include "ssem/em.hpp"
#include "ssem/population.hpp"
#include "ssem/quadrature.hpp"
#include "ssem/sampling.hpp"

namespace {

using namespace ssem;

void BM_Gk21GaussianMass(benchmark::State& state) {
    const double tol = std::pow(10.0, -static_cast<double>(state.range(0)));
    for (auto _ : state) {
        auto r = integrate_gk21([](double x) { return std::exp(-0.5 * x * x); }, -12.0, 12.0, tol, 1 << 16, 12);
        benchmark::DoNotOptimize(r.value);
    }
}
BENCHMARK(BM_Gk21GaussianMass)->Arg(6)->Arg(10)->Arg(13);

void BM_PopM0Sym2(benchmark::State& state) {
    const PopulationModel pm(ModelKind::sym2(), MixtureParams::symmetric(1.5), 0.0);
    const auto probe = MixtureParams::symmetric(2.5);
    for (auto _ : state) benchmark::DoNotOptimize(pop_m0(pm, probe, 1));
}
BENCHMARK(BM_PopM0Sym2);

void BM_PopMGammaGmm(benchmark::State& state) {
    const auto k = static_cast<std::size_t>(state.range(0));
    std::vector<double> pi(k, 1.0 / static_cast<double>(k)), theta(k);
    for (std::size_t j = 0; j < k; ++j) theta[j] = 3.0 * static_cast<double>(j);
    const PopulationModel pm(ModelKind::gmm(), MixtureParams(pi, theta), 0.5);
    std::vector<double> probe = theta;
    for (double& t : probe) t += 0.4;
    const auto params = pm.theta_star().with_theta(probe);
    for (auto _ : state) benchmark::DoNotOptimize(pop_m_gamma_all(pm, params));
}
BENCHMARK(BM_PopMGammaGmm)->Arg(2)->Arg(3)->Arg(5);

void BM_PopMGammaPoisson(benchmark::State& state) {
    const PopulationModel pm(ModelKind::expfam(poisson_family()),
                             MixtureParams({0.5, 0.5}, {std::log(2.0), std::log(5.0)}), 0.5);
    const auto probe = pm.theta_star().with_theta({0.9, 1.4});
    for (auto _ : state) benchmark::DoNotOptimize(pop_m_gamma_all(pm, probe));
}
BENCHMARK(BM_PopMGammaPoisson);

void BM_Theorem1Sym2(benchmark::State& state) {
    const PopulationModel pm(ModelKind::sym2(), MixtureParams::symmetric(1.5), 0.5);
    std::vector<MixtureParams> probes;
    for (double d : {0.2, 0.4, 0.7, 1.0, 1.5, 2.0, 2.5, 3.0}) probes.push_back(MixtureParams::symmetric(1.5 + d));
    for (auto _ : state) benchmark::DoNotOptimize(verify_theorem1(pm, probes));
}
BENCHMARK(BM_Theorem1Sym2);

Dataset bench_dataset(const ModelKind& kind, const MixtureParams& truth, std::size_t total) {
    const std::size_t m = total / 4;
    return sample_dataset(kind, truth, {std::uint64_t{7}, m, total - m});
}

void BM_MStepGmm(benchmark::State& state) {
    const auto truth = MixtureParams({0.3, 0.7}, {-1.0, 1.5});
    const auto data = bench_dataset(ModelKind::gmm(), truth, static_cast<std::size_t>(state.range(0)));
    const auto probe = truth.with_theta({-0.5, 1.0});
    for (auto _ : state) benchmark::DoNotOptimize(m_step_gmm(data, probe));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MStepGmm)->Arg(1 << 12)->Arg(1 << 16)->Arg(1 << 20);

void BM_MStepSym2(benchmark::State& state) {
    const auto data = bench_dataset(ModelKind::sym2(), MixtureParams::symmetric(1.2), static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(m_step_sym2(data, 0.8));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MStepSym2)->Arg(1 << 12)->Arg(1 << 16)->Arg(1 << 20);

void BM_MStepPoisson(benchmark::State& state) {
    const auto kind = ModelKind::expfam(poisson_family());
    const auto truth = MixtureParams({0.5, 0.5}, {std::log(2.0), std::log(5.0)});
    const auto data = bench_dataset(kind, truth, static_cast<std::size_t>(state.range(0)));
    const auto probe = truth.with_theta({0.5, 1.8});
    for (auto _ : state) benchmark::DoNotOptimize(m_step(kind, data, probe));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MStepPoisson)->Arg(1 << 12)->Arg(1 << 16);

}  // namespace

BENCHMARK_MAIN();
