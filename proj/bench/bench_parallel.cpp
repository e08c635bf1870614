// Serial reference loops against the OpenMP paths. On a single-core host the
// two should match; the gap shows up with AAPI_THREADS / cores > 1.

#include "aapi/harness.hpp"
#include "aapi/mdp_core.hpp"
#include "aapi/verify.hpp"

#include <benchmark/benchmark.h>

using namespace aapi;

namespace {

Execution mode(const benchmark::State& st) { return st.range(0) == 0 ? Execution::serial : Execution::parallel; }

void BM_MixingTimeBound(benchmark::State& st) {
    Rng rng(1);
    const auto mdp = random_mdp(8, 3, rng);  // 3^8 deterministic policies
    for (auto _ : st) benchmark::DoNotOptimize(mixing_time_bound(mdp, mode(st)).beta);
    st.SetLabel(st.range(0) == 0 ? "serial" : "openmp");
}

void BM_RunSuite(benchmark::State& st) {
    ExperimentConfig cfg;
    cfg.env = EnvSpec::tabular(5, 2);
    cfg.agent.tau = 500;
    cfg.agent.phases = 40;
    cfg.agent.eta = 0.1;
    cfg.runs = 8;
    for (auto _ : st) benchmark::DoNotOptimize(run_suite(cfg, mode(st)).cost.mean.back());
    st.SetLabel(st.range(0) == 0 ? "serial" : "openmp");
}

void BM_VerifyRelq(benchmark::State& st) {
    SuiteOptions opts;
    opts.trials = 100;
    opts.exec = mode(st);
    opts.live_relq = false;
    for (auto _ : st) benchmark::DoNotOptimize(run_verify_suite(Suite::relq, opts).size());
    st.SetLabel(st.range(0) == 0 ? "serial" : "openmp");
}

}  // namespace

BENCHMARK(BM_MixingTimeBound)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunSuite)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VerifyRelq)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
