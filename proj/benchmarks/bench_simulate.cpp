#include "oco/simulator.hpp"

#include <benchmark/benchmark.h>

using namespace oco;

namespace {

const model::FunctionClass kFc = model::FunctionClass::from_kappa_fixed_m(4.0, 2.0);

void BM_Run(benchmark::State& st) {
    const int T = static_cast<int>(st.range(0));
    auto r = model::make_zoo("onm", kFc, 2);
    model::require_structure(r);
    const auto sc = sim::generate_scenario(1, T, 2, kFc, 0.1, sim::Box::cube(-1, 1));
    for (auto _ : st) benchmark::DoNotOptimize(sim::run_algorithm(r, sc));
    st.SetItemsProcessed(st.iterations() * T);
}
BENCHMARK(BM_Run)->Arg(100)->Arg(1000);

void BM_Metrics(benchmark::State& st) {
    auto r = model::make_zoo("ogd2", kFc, 2);
    model::require_structure(r);
    const auto sc = sim::generate_scenario(2, 1000, 2, kFc, 0.1, sim::Box::cube(-1, 1));
    const auto tr = sim::run_algorithm(r, sc);
    for (auto _ : st) benchmark::DoNotOptimize(sim::regularity_metrics(sc, tr, r.U));
}
BENCHMARK(BM_Metrics);

void BM_IqcSums(benchmark::State& st) {
    auto r = model::make_zoo("ogd2", kFc, 2);
    model::require_structure(r);
    const auto sc = sim::generate_scenario(3, 100, 2, kFc, 0.1, sim::Box::cube(-1, 1));
    const auto tr = sim::run_algorithm(r, sc);
    for (auto _ : st) benchmark::DoNotOptimize(sim::empirical_iqc_sums(r, kFc, sc, tr, iqc::Mode::Variational));
}
BENCHMARK(BM_IqcSums)->Unit(benchmark::kMillisecond);

}  // namespace
