// Serial reference vs OpenMP kernels. Arg 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include "selfreg/pipeline.hpp"
#include "selfreg/simulate.hpp"
#include "selfreg/study.hpp"

using namespace selfreg;

namespace {

Execution exec_of(const benchmark::State& state) {
    return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

const Panel& reference_panel() {
    static const Panel panel = generate_panel(SimulationCondition::table(1), 7, Execution::serial);
    return panel;
}

void BM_GeneratePanel(benchmark::State& state) {
    const auto cond = SimulationCondition::table(1);
    for (auto _ : state) benchmark::DoNotOptimize(generate_panel(cond, 7, exec_of(state)));
}

void BM_DerivePanelSpline(benchmark::State& state) {
    const auto& panel = reference_panel();
    for (auto _ : state)
        benchmark::DoNotOptimize(derive_panel(panel, DerivativeSpec::spline(0.73), exec_of(state)));
}

void BM_DerivePanelGlla(benchmark::State& state) {
    const auto& panel = reference_panel();
    for (auto _ : state)
        benchmark::DoNotOptimize(derive_panel(panel, DerivativeSpec::glla(9), exec_of(state)));
}

void BM_SmoothingSearch(benchmark::State& state) {
    const auto& panel = reference_panel();
    SmoothingGrid grid = SmoothingGrid::defaults();
    grid.refine_spar = false;
    for (auto _ : state)
        benchmark::DoNotOptimize(optimize_smoothing(panel, DerivativeKind::spline, RegressionMethod::lmm,
                                                    false, grid, exec_of(state)));
}

void BM_RunCondition(benchmark::State& state) {
    StudyOptions opt;
    opt.n_reps = 8;
    opt.fixed_smoothing = DerivativeSpec::spline(0.73);
    opt.exec = exec_of(state);
    const auto cond = SimulationCondition::table(1);
    for (auto _ : state) benchmark::DoNotOptimize(run_condition(cond, DerivativeKind::spline, opt));
}

}  // namespace

BENCHMARK(BM_GeneratePanel)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DerivePanelSpline)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DerivePanelGlla)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SmoothingSearch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunCondition)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
