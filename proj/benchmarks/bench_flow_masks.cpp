#include <benchmark/benchmark.h>

#include <cmath>
#include <cstddef>

#include "vstyle/flow.hpp"

namespace {

// Smooth sub-2px sinusoidal displacement fields, deterministic per dims.
vstyle::FlowFieldSequence make_flows(std::size_t frames, std::size_t h, std::size_t w) {
    vstyle::FlowFieldSequence f = vstyle::FlowFieldSequence::zero(frames, h, w);
    const double two_pi = 2.0 * std::acos(-1.0);
    std::size_t n = 0;
    for (auto* group : {&f.forward, &f.backward})
        for (vstyle::FlowField& field : *group) {
            const double phase = 0.37 * static_cast<double>(++n);
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x)
                    field.set(y, x,
                              static_cast<float>(1.4 * std::sin(two_pi * y / h + phase)),
                              static_cast<float>(1.4 * std::cos(two_pi * x / w + phase)));
        }
    return f;
}

void BM_FlowMask(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const vstyle::FlowFieldSequence flows = make_flows(5, dim, dim);
    for (auto _ : state) {
        vstyle::CorrespondenceMask m = vstyle::flow_mask(flows);
        benchmark::DoNotOptimize(m.entries.data());
    }
}

void BM_DilateRadius1(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const vstyle::CorrespondenceMask m = vstyle::flow_mask(make_flows(5, dim, dim));
    for (auto _ : state) {
        vstyle::CorrespondenceMask d = vstyle::dilate(m, 1);
        benchmark::DoNotOptimize(d.entries.data());
    }
}

void BM_PoolToTokens(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const vstyle::CorrespondenceMask m =
        vstyle::dilate(vstyle::flow_mask(make_flows(5, dim, dim)), 1);
    for (auto _ : state) {
        vstyle::CorrespondenceMask p = vstyle::pool_to_tokens(m, 2, 2, 2, 1);
        benchmark::DoNotOptimize(p.entries.data());
    }
}

BENCHMARK(BM_FlowMask)->Arg(8)->Arg(12)->Arg(16);
BENCHMARK(BM_DilateRadius1)->Arg(8)->Arg(12)->Arg(16);
BENCHMARK(BM_PoolToTokens)->Arg(8)->Arg(12)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
