// Serial reference loops vs OpenMP kernels for the scenario estimators.
// Both variants compute identical samples; only the wall clock differs.

#include <benchmark/benchmark.h>

#include "wcdp/generators.hpp"
#include "wcdp/inforelax.hpp"
#include "wcdp/lagrangian.hpp"
#include "wcdp/practical.hpp"

using namespace wcdp;

namespace {

struct Fixture {
    WeaklyCoupledModel model = random_model(17, 3, 4, 2);
    LambdaSearchResult lag = optimal_lambda_lp(model, InitialDistribution::uniform(model));
    Penalty penalty = Penalty::from_lagrangian(lag.bound);
    JointState x0 = JointState(3, 0);
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

void BM_InfoBound(benchmark::State& state) {
    const auto& f = fixture();
    const InnerContext ctx(f.model, f.penalty);
    EstimatorConfig est;
    est.n_scenarios = 256;
    est.exec = mode(state);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_info_bound(ctx, f.x0, est).mean);
    state.SetItemsProcessed(state.iterations() * static_cast<long>(est.n_scenarios));
}

void BM_PracticalBound(benchmark::State& state) {
    const auto& f = fixture();
    const RelaxedContext ctx(f.model, f.penalty);
    EstimatorConfig est;
    est.n_scenarios = 128;
    est.exec = mode(state);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_practical_bound(ctx, f.x0, est).mean);
    state.SetItemsProcessed(state.iterations() * static_cast<long>(est.n_scenarios));
}

void BM_PolicySimulation(benchmark::State& state) {
    const auto& f = fixture();
    const auto policy = lagrangian_greedy_policy(f.model, f.lag.bound);
    const int horizon = default_path_horizon(f.model);
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate_policy(f.model, policy, f.x0, 2000, horizon, 1, mode(state)).mean);
    state.SetItemsProcessed(state.iterations() * 2000);
}

} // namespace

BENCHMARK(BM_InfoBound)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PracticalBound)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PolicySimulation)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
