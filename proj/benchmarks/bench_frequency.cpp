#include <benchmark/benchmark.h>

#include <random>

#include "vstyle/frequency.hpp"
#include "vstyle/grid.hpp"

namespace {

vstyle::Grid4 make_grid(std::size_t s, std::size_t c, std::size_t h, std::size_t w,
                        std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    vstyle::Grid4 g(s, c, h, w);
    for (float& v : g.data) v = dist(rng);
    return g;
}

void BM_Fft2Split(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const vstyle::Grid4 x = make_grid(1, 4, dim, dim, 1);
    const vstyle::LowPassFilter f(dim, dim, 0.25);
    for (auto _ : state) {
        auto parts = vstyle::fft2_split(x, f);
        benchmark::DoNotOptimize(parts.first.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(x.size()));
}

void BM_IhcCompensate(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const vstyle::Grid4 x_s = make_grid(3, 4, dim, dim, 1);
    const vstyle::Grid4 x_r = make_grid(3, 4, dim, dim, 2);
    const vstyle::Grid4 target = make_grid(3, 4, dim, dim, 3);
    vstyle::IhcConfig cfg;
    cfg.lambda_schedule = {0.7};
    cfg.window_begin = 0;
    cfg.window_end = 1;
    cfg.filter = vstyle::LowPassFilter(dim, dim, 0.25);
    for (auto _ : state) {
        vstyle::Grid4 y = vstyle::ihc_compensate(x_s, x_r, target, cfg, 0);
        benchmark::DoNotOptimize(y.data.data());
    }
}

void BM_SpectrumProfile(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const vstyle::Grid4 x = make_grid(3, 4, dim, dim, 1);
    for (auto _ : state) {
        std::vector<double> profile = vstyle::spectrum_profile(x);
        benchmark::DoNotOptimize(profile.data());
    }
}

BENCHMARK(BM_Fft2Split)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_IhcCompensate)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_SpectrumProfile)->Arg(16)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
