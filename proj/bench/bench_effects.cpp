// Serial reference kernel against the OpenMP kernel on the synthetic corpus,
// plus the statistics stage that follows it.

#include <map>
#include <memory>

#include <benchmark/benchmark.h>

#include "d2d/experiment.hpp"
#include "d2d/ingest.hpp"

namespace {

struct Workload {
    d2d::CausalLoopDiagram cld;
    d2d::CompilationPlan plan;
    std::vector<d2d::ParameterAssignment> samples;
    std::vector<d2d::InterventionSpec> interventions;
    std::vector<std::string> vois;

    explicit Workload(int n)
        : cld(d2d::load_model(D2D_DATA_DIR "/synthetic.xlsx").cld), plan(cld),
          interventions(d2d::tagged_interventions(cld)), vois(d2d::variables_of_interest(cld)) {
        d2d::ModelSettings settings;
        settings.seed = 42;
        for (int k = 0; k < n; ++k) samples.push_back(d2d::sample_parameters(cld, settings, k));
    }
};

const Workload &workload(int n) {
    static std::map<int, std::unique_ptr<Workload>> cache;
    auto &slot = cache[n];
    if (!slot) slot = std::make_unique<Workload>(n);
    return *slot;
}

void BM_EffectsSerial(benchmark::State &state) {
    const auto &w = workload(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(d2d::evaluate_effects_serial(w.plan, w.samples, w.interventions, w.vois, 20));
    state.SetItemsProcessed(state.iterations() * state.range(0) * static_cast<int64_t>(w.interventions.size()));
}

void BM_EffectsParallel(benchmark::State &state) {
    const auto &w = workload(static_cast<int>(state.range(0)));
    const int threads = static_cast<int>(state.range(1));
    for (auto _ : state)
        benchmark::DoNotOptimize(
            d2d::evaluate_effects_parallel(w.plan, w.samples, w.interventions, w.vois, 20, threads));
    state.SetItemsProcessed(state.iterations() * state.range(0) * static_cast<int64_t>(w.interventions.size()));
}

void BM_Sensitivity(benchmark::State &state) {
    const auto &w = workload(static_cast<int>(state.range(0)));
    const auto effects = d2d::evaluate_effects_serial(w.plan, w.samples, w.interventions, w.vois, 20);
    const d2d::stats::BootstrapPlan plan(w.samples.size(), 200, 1);
    const auto execution = state.range(1) ? d2d::Execution::Parallel : d2d::Execution::Sequential;
    for (auto _ : state)
        benchmark::DoNotOptimize(d2d::sensitivity(effects.front(), w.samples, w.cld, {true, 0}, plan, execution));
}

} // namespace

BENCHMARK(BM_EffectsSerial)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EffectsParallel)->ArgsProduct({{100, 1000}, {1, 2, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Sensitivity)->ArgsProduct({{100, 1000}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
