#include "oco/certifier.hpp"
#include "support/sdp_oracle.hpp"

#include <benchmark/benchmark.h>

using namespace oco;

namespace {

void BM_SdpRandom(benchmark::State& st) {
    const auto s = oracle::random_sdp(static_cast<std::uint64_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(sdp::solve(s.problem));
}
BENCHMARK(BM_SdpRandom)->Arg(1)->Arg(2);

void certify_bench(benchmark::State& st, const std::string& id, iqc::Mode mode) {
    const double kappa = static_cast<double>(st.range(0));
    const auto fc = model::FunctionClass::from_kappa_fixed_m(kappa, 2.0);
    const auto r = model::make_zoo(id, fc);
    for (auto _ : st) benchmark::DoNotOptimize(cert::certify(r, fc, mode));
}

void BM_PointwiseOgd(benchmark::State& st) { certify_bench(st, "ogd", iqc::Mode::Pointwise); }
void BM_PointwiseOgd10(benchmark::State& st) { certify_bench(st, "ogd10", iqc::Mode::Pointwise); }
void BM_VariationalOgd(benchmark::State& st) { certify_bench(st, "ogd", iqc::Mode::Variational); }
void BM_VariationalOgd2(benchmark::State& st) { certify_bench(st, "ogd2", iqc::Mode::Variational); }

BENCHMARK(BM_PointwiseOgd)->Arg(1)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PointwiseOgd10)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VariationalOgd)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VariationalOgd2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
