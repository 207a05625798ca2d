#include <benchmark/benchmark.h>

#include <complex>
#include <random>
#include <vector>

#include "fesid/identify.hpp"
#include "fesid/model.hpp"
#include "fesid/signals.hpp"
#include "fesid/spectral.hpp"
#include "fesid/synthetic.hpp"

using namespace fesid;

namespace {

TimeSeries noise(std::size_t n, double dt) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    for (double& x : v) x = g(rng);
    return TimeSeries(0.0, dt, v, Unit::ampere);
}

void BM_Fft(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<spectral::Complex> data(n);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    for (auto& c : data) c = {g(rng), 0.0};
    for (auto _ : state) {
        auto copy = data;
        spectral::fft_in_place(copy);
        benchmark::DoNotOptimize(copy.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Fft)->RangeMultiplier(4)->Range(256, 1 << 16)->Complexity(benchmark::oNLogN);

void BM_Etfe(benchmark::State& state) {
    const TimeSeries u = noise(static_cast<std::size_t>(state.range(0)), 5e-3);
    const TimeSeries y = model::simulate_lti(model::RationalTF::first_order_lag(0.1889, 1.0), u, 0.0);
    for (auto _ : state) benchmark::DoNotOptimize(spectral::etfe(u, y));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Etfe)->Arg(4096)->Arg(1 << 16);

void BM_SimulateBandPass(benchmark::State& state) {
    const TimeSeries u = noise(static_cast<std::size_t>(state.range(0)), 1e-6);
    const auto tf = model::RationalTF::band_pass(8.0e-10, 2.2e-5, 1.9e-7);
    for (auto _ : state) benchmark::DoNotOptimize(model::simulate_lti(tf, u, 0.0));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateBandPass)->Arg(1 << 18);

void BM_PredictForce(benchmark::State& state) {
    const TimeSeries i = noise(200000, 1e-4);
    const auto m = synthetic::reference_subject('A');
    for (auto _ : state) benchmark::DoNotOptimize(model::predict_force(m, i));
}
BENCHMARK(BM_PredictForce);

void BM_Decimate(benchmark::State& state) {
    const TimeSeries x = noise(200000, 1e-4);
    for (auto _ : state) benchmark::DoNotOptimize(signals::decimate(x, 50));
}
BENCHMARK(BM_Decimate);

void BM_IdentifyMuscleModel(benchmark::State& state) {
    synthetic::Protocol p;
    const auto ds = synthetic::make_dataset(synthetic::reference_subject('A'), p, 0);
    for (auto _ : state) benchmark::DoNotOptimize(identify::identify_muscle_model(ds));
}
BENCHMARK(BM_IdentifyMuscleModel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
