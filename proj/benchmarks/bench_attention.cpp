#include <benchmark/benchmark.h>

#include <random>

#include "vstyle/attention.hpp"

namespace {

vstyle::TokenMatrix make_tokens(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    vstyle::TokenMatrix t;
    t.tokens = Eigen::MatrixXd(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) t.tokens(r, c) = dist(rng);
    return t;
}

vstyle::AttentionMask make_mask(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution keep(0.6);
    vstyle::AttentionMask m(rows, cols, false);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m.set(r, c, keep(rng));
    return m;
}

void BM_PlainAttention(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    const vstyle::TokenMatrix q = make_tokens(n, 16, 1);
    const vstyle::TokenMatrix k = make_tokens(n, 16, 2);
    const vstyle::TokenMatrix v = make_tokens(n, 16, 3);
    for (auto _ : state) {
        vstyle::TokenMatrix out = vstyle::attention(q, k, v);
        benchmark::DoNotOptimize(out.tokens.data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}

void BM_MaskedAttention(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    const vstyle::TokenMatrix q = make_tokens(n, 16, 1);
    const vstyle::TokenMatrix k = make_tokens(n, 16, 2);
    const vstyle::TokenMatrix v = make_tokens(n, 16, 3);
    const vstyle::AttentionMask m =
        make_mask(static_cast<std::size_t>(n), static_cast<std::size_t>(n), 4);
    for (auto _ : state) {
        vstyle::TokenMatrix out = vstyle::masked_attention(q, k, v, m);
        benchmark::DoNotOptimize(out.tokens.data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}

void BM_IsolatedAttention(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    vstyle::BranchTokens bt;
    bt.recon = {make_tokens(n, 16, 1), make_tokens(n, 16, 2), make_tokens(n, 16, 3)};
    bt.recon_refs = {make_tokens(32, 16, 4), make_tokens(32, 16, 5), make_tokens(32, 16, 6)};
    for (auto _ : state) {
        auto out = vstyle::isolated_attention(bt);
        benchmark::DoNotOptimize(out.first.tokens.data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}

BENCHMARK(BM_PlainAttention)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_MaskedAttention)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_IsolatedAttention)->Arg(64)->Arg(128)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
